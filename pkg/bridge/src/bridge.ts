/**
 * Bridge operations: contextual word-embedding dumps, sentence-embedding
 * dumps, and masked-probability answers, all through the bit-exact file
 * formats the analysis side defines.
 */
import { readFileSync, writeFileSync } from 'node:fs';

import { writeArchive } from './archive.js';
import { backendFor } from './stub.js';
import type {
  BridgeConfig,
  ManifestRecord,
  ModelBackend,
  ProbAnswer,
  ProbQuery,
  SentenceRecord,
} from './types.js';

export const MASK = '[MASK]';

// Leading/trailing punctuation stripped before token comparison; mirrors the
// analysis side (general punctuation categories plus the danda marks).
const EDGE_PUNCT =
  /^[\p{Po}\p{Ps}\p{Pe}\p{Pi}\p{Pf}\p{Pd}।॥]+|[\p{Po}\p{Ps}\p{Pe}\p{Pi}\p{Pf}\p{Pd}।॥]+$/gu;

export function stripEdgePunctuation(token: string): string {
  return token.replace(EDGE_PUNCT, '');
}

export function readJsonl<T>(path: string): T[] {
  const out: T[] = [];
  for (const line of readFileSync(path, 'utf-8').split('\n')) {
    if (line.trim().length === 0) continue;
    out.push(JSON.parse(line) as T);
  }
  return out;
}

export function writeJsonl(path: string, rows: unknown[]): void {
  writeFileSync(path, rows.map((r) => JSON.stringify(r)).join('\n') + '\n', 'utf-8');
}

function meanPool(vectors: Float64Array[], dim: number): Float64Array {
  const out = new Float64Array(dim);
  for (const vec of vectors) {
    for (let i = 0; i < dim; i++) out[i] += vec[i];
  }
  for (let i = 0; i < dim; i++) out[i] /= vectors.length;
  return out;
}

export interface DumpResult {
  rows: number;
  skipped: Array<{ sentence_id: number; stimulus: string; reason: string }>;
}

/**
 * One archive row per record: the mean of the hidden states of the matched
 * word's fragments.  Records whose matched variant cannot be located in the
 * tokenization are skipped and counted.
 */
export function dumpWordEmbeddings(
  records: SentenceRecord[],
  config: BridgeConfig,
  outDir: string,
  backend: ModelBackend = backendFor(config),
): DumpResult {
  const rows: Float64Array[] = [];
  const manifestRecords: Omit<ManifestRecord, 'row'>[] = [];
  const skipped: DumpResult['skipped'] = [];
  for (const record of records) {
    const tokens = record.text.split(/\s+/u).filter((t) => t.length > 0);
    const index = record.token_index ?? -1;
    const variant = record.matched_variant ?? '';
    const located =
      index >= 0 && index < tokens.length
        ? stripEdgePunctuation(tokens[index])
        : undefined;
    if (located === undefined || located !== variant || variant.length === 0) {
      skipped.push({
        sentence_id: record.sentence_id,
        stimulus: record.stimulus,
        reason: `variant ${JSON.stringify(variant)} not at token ${index}`,
      });
      continue;
    }
    const fragments = backend.tokenizeWord(variant);
    rows.push(meanPool(fragments.map((f) => backend.fragmentVector(f)), backend.dim));
    manifestRecords.push({
      stimulus: record.stimulus,
      sentence_id: record.sentence_id,
      word_count: record.word_count ?? tokens.length,
    });
  }
  writeArchive(outDir, rows, manifestRecords, backend.dim);
  return { rows: rows.length, skipped };
}

/**
 * One archive row per input sentence, pooled per config.sentence_pooling:
 * "token_mean" averages all fragment vectors, "cls" uses a classifier-token
 * stand-in keyed by the full sentence.
 */
export function dumpSentenceEmbeddings(
  sentences: SentenceRecord[],
  config: BridgeConfig,
  outDir: string,
  backend: ModelBackend = backendFor(config),
): DumpResult {
  const rows: Float64Array[] = [];
  const manifestRecords: Omit<ManifestRecord, 'row'>[] = [];
  for (const record of sentences) {
    const tokens = record.text.split(/\s+/u).filter((t) => t.length > 0);
    let pooled: Float64Array;
    if (config.sentence_pooling === 'cls') {
      pooled = backend.fragmentVector(`[CLS]${record.text}`);
    } else {
      const fragments = tokens.flatMap((t) => backend.tokenizeWord(t));
      pooled = meanPool(fragments.map((f) => backend.fragmentVector(f)), backend.dim);
    }
    rows.push(pooled);
    manifestRecords.push({
      stimulus: record.stimulus,
      sentence_id: record.sentence_id,
      word_count: record.word_count ?? tokens.length,
    });
  }
  writeArchive(outDir, rows, manifestRecords, backend.dim);
  return { rows: rows.length, skipped: [] };
}

function countMasks(text: string): number {
  return text.split(MASK).length - 1;
}

/**
 * Probability of the candidate at the target mask.  Multi-fragment
 * candidates get the geometric mean of per-fragment probabilities so values
 * stay comparable across fragment counts.  Per-query failures are reported
 * in-band with the probability omitted.
 */
export function answerQueries(
  queries: ProbQuery[],
  config: BridgeConfig,
  backend: ModelBackend = backendFor(config),
): ProbAnswer[] {
  return queries.map((query): ProbAnswer => {
    const masks = countMasks(query.masked_text);
    const maskIndex = query.target_mask_index ?? 0;
    if (masks === 0) {
      return { id: query.id, error: 'masked_text contains no [MASK] marker' };
    }
    if (maskIndex < 0 || maskIndex >= masks) {
      return { id: query.id, error: `target mask ${maskIndex} out of range (${masks} masks)` };
    }
    const fragments = backend.tokenizeWord(query.candidate);
    if (fragments.length === 0) {
      return { id: query.id, error: 'candidate does not tokenize' };
    }
    let logSum = 0;
    for (const fragment of fragments) {
      const p = backend.maskProbability(query.masked_text, maskIndex, fragment);
      if (!(p > 0 && p <= 1)) {
        return { id: query.id, error: `backend returned probability ${p}` };
      }
      logSum += Math.log(p);
    }
    return { id: query.id, probability: Math.exp(logSum / fragments.length) };
  });
}
