/**
 * Embedding archive IO.  An archive is a directory holding manifest.json
 * plus matrix.bin (count x dim little-endian float32, row-major); the layout
 * matches the analysis side byte for byte, so round trips are exact.
 */
import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import type { Manifest, ManifestRecord } from './types.js';

export const MANIFEST_NAME = 'manifest.json';
export const MATRIX_NAME = 'matrix.bin';

export function serializeMatrix(rows: Float64Array[] | Float32Array[], dim: number): Buffer {
  const count = rows.length;
  const buffer = Buffer.alloc(count * dim * 4);
  for (let r = 0; r < count; r++) {
    const row = rows[r];
    if (row.length !== dim) {
      throw new Error(`row ${r} has ${row.length} components, expected ${dim}`);
    }
    for (let c = 0; c < dim; c++) {
      buffer.writeFloatLE(Math.fround(row[c]), (r * dim + c) * 4);
    }
  }
  return buffer;
}

export function writeArchive(
  dir: string,
  rows: Float64Array[] | Float32Array[],
  records: Omit<ManifestRecord, 'row'>[],
  dim: number,
): void {
  if (rows.length !== records.length) {
    throw new Error(`${records.length} records for ${rows.length} matrix rows`);
  }
  const manifest: Manifest = {
    version: 1,
    dim,
    count: rows.length,
    dtype: 'f32le',
    records: records.map((rec, row) => ({
      row,
      stimulus: rec.stimulus,
      sentence_id: rec.sentence_id,
      word_count: rec.word_count,
    })),
  };
  mkdirSync(dir, { recursive: true });
  writeFileSync(join(dir, MANIFEST_NAME), JSON.stringify(manifest, null, 2) + '\n', 'utf-8');
  writeFileSync(join(dir, MATRIX_NAME), serializeMatrix(rows, dim));
}

export interface LoadedArchive {
  manifest: Manifest;
  /** Row-major float32 values; slice r*dim..(r+1)*dim is row r. */
  values: Float32Array;
}

export function readArchive(dir: string): LoadedArchive {
  const manifest = JSON.parse(readFileSync(join(dir, MANIFEST_NAME), 'utf-8')) as Manifest;
  if (manifest.version !== 1) {
    throw new Error(`unsupported archive version ${manifest.version}`);
  }
  if (manifest.dtype !== 'f32le') {
    throw new Error(`unsupported dtype ${manifest.dtype}`);
  }
  const raw = readFileSync(join(dir, MATRIX_NAME));
  const expected = manifest.count * manifest.dim * 4;
  if (raw.length !== expected) {
    throw new Error(`matrix holds ${raw.length} bytes, expected ${expected}`);
  }
  if (manifest.records.length !== manifest.count) {
    throw new Error(`${manifest.records.length} manifest records for ${manifest.count} rows`);
  }
  manifest.records.forEach((rec, i) => {
    if (rec.row !== i) throw new Error(`record ${i} carries row ${rec.row}`);
  });
  const values = new Float32Array(manifest.count * manifest.dim);
  for (let i = 0; i < values.length; i++) {
    values[i] = raw.readFloatLE(i * 4);
  }
  return { manifest, values };
}

export function archiveRow(archive: LoadedArchive, row: number): Float32Array {
  const { dim } = archive.manifest;
  return archive.values.slice(row * dim, (row + 1) * dim);
}
