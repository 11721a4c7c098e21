/**
 * Stub model backend: deterministic fake hidden states and mask
 * probabilities keyed by token hash.  No weights, no network; exists so the
 * whole pipeline (extraction -> archives -> analysis, queries -> answers)
 * can be integration-tested end to end.
 */
import { createHash } from 'node:crypto';

import type { BridgeConfig, ModelBackend } from './types.js';

const MAX_FRAGMENT_CHARS = 4;

/** Chunk a word into fixed-width pieces, imitating subword tokenization. */
export function chunkWord(word: string): string[] {
  const chars = Array.from(word);
  if (chars.length === 0) return [];
  const fragments: string[] = [];
  for (let i = 0; i < chars.length; i += MAX_FRAGMENT_CHARS) {
    fragments.push(chars.slice(i, i + MAX_FRAGMENT_CHARS).join(''));
  }
  return fragments;
}

function hashBytes(...parts: string[]): Buffer {
  const h = createHash('sha256');
  for (const part of parts) {
    h.update(part, 'utf-8');
    h.update(Buffer.from([0x1f]));
  }
  return h.digest();
}

/** xorshift128+ seeded from a hash; plenty for fake hidden states. */
function seededFloats(seedBytes: Buffer, n: number): Float64Array {
  let s0 = seedBytes.readBigUInt64LE(0);
  let s1 = seedBytes.readBigUInt64LE(8);
  const mask = (1n << 64n) - 1n;
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    let x = s0;
    const y = s1;
    s0 = y;
    x = (x ^ (x << 23n)) & mask;
    x ^= x >> 17n;
    x ^= y ^ (y >> 26n);
    s1 = x;
    const v = (x + y) & mask;
    // top 53 bits -> [0, 1), then center to [-1, 1)
    out[i] = 2.0 * (Number(v >> 11n) / 2 ** 53) - 1.0;
  }
  return out;
}

export class StubBackend implements ModelBackend {
  readonly dim: number;
  private readonly scale: number;

  constructor(dim: number, scale = 1.0) {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new Error(`stub backend needs a positive integer dim, got ${dim}`);
    }
    this.dim = dim;
    this.scale = scale;
  }

  tokenizeWord(word: string): string[] {
    return chunkWord(word);
  }

  fragmentVector(fragment: string): Float64Array {
    const vec = seededFloats(hashBytes('hidden', fragment), this.dim);
    if (this.scale !== 1.0) {
      for (let i = 0; i < vec.length; i++) vec[i] *= this.scale;
    }
    return vec;
  }

  maskProbability(maskedText: string, maskIndex: number, fragment: string): number {
    const digest = hashBytes('prob', maskedText, String(maskIndex), fragment);
    const steps = 1_000_000;
    const bucket = Number(digest.readBigUInt64LE(0) % BigInt(steps));
    return (bucket + 1) / (steps + 1); // in (0, 1)
  }
}

export function backendFor(config: BridgeConfig): ModelBackend {
  if (config.model === 'stub') {
    return new StubBackend(config.dim, config.scale ?? 1.0);
  }
  throw new Error(
    `unknown model backend ${JSON.stringify(config.model)}; only "stub" ships here`,
  );
}
