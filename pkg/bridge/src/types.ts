/** Shared bridge types: configuration, wire records, and the backend contract. */

export interface BridgeConfig {
  /** Backend identifier; "stub" is always available, others must be registered. */
  model: string;
  /** Hidden-state width of the backend. */
  dim: number;
  /** Word-embedding pooling over subword fragments; only fragment_mean is defined. */
  pooling: 'fragment_mean';
  /** Sentence-embedding pooling: classifier-token stand-in or mean over tokens. */
  sentence_pooling: 'cls' | 'token_mean';
  /** Which layer embeddings come from; only the final layer is supported. */
  layer: 'final';
  batch_size: number;
  device: string;
  /** Multiplier applied to stub hidden states; used by linearity tests. */
  scale?: number;
}

export const DEFAULT_CONFIG: BridgeConfig = {
  model: 'stub',
  dim: 16,
  pooling: 'fragment_mean',
  sentence_pooling: 'token_mean',
  layer: 'final',
  batch_size: 32,
  device: 'cpu',
};

/** One line of the record-store / sentence-input JSONL. */
export interface SentenceRecord {
  sentence_id: number;
  text: string;
  stimulus: string;
  matched_variant?: string;
  token_index?: number;
  word_count?: number;
  source?: string;
}

/** One line of a query file emitted by the analysis side. */
export interface ProbQuery {
  id: string;
  masked_text: string;
  candidate: string;
  mask_role: 'target_only' | 'target_and_attribute';
  /** Zero-based position of the target mask among the [MASK] markers. */
  target_mask_index?: number;
}

export type ProbAnswer =
  | { id: string; probability: number }
  | { id: string; error: string };

export interface ManifestRecord {
  row: number;
  stimulus: string;
  sentence_id: number;
  word_count: number;
}

export interface Manifest {
  version: 1;
  dim: number;
  count: number;
  dtype: 'f32le';
  records: ManifestRecord[];
}

/**
 * What a model implementation must provide.  The stub backend fakes all
 * three deterministically; a real transformer backend would tokenize with
 * the model vocabulary, read final-layer hidden states, and evaluate the
 * masked-token distribution.
 */
export interface ModelBackend {
  readonly dim: number;
  /** Subword fragments of one whitespace word (non-empty for non-empty input). */
  tokenizeWord(word: string): string[];
  /** Final-layer hidden state for one fragment in context. */
  fragmentVector(fragment: string): Float64Array;
  /** Probability in (0, 1] of `fragment` filling mask number `maskIndex`. */
  maskProbability(maskedText: string, maskIndex: number, fragment: string): number;
}
