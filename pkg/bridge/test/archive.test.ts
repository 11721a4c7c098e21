import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { archiveRow, readArchive, serializeMatrix, writeArchive } from '../src/archive.js';

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), 'bridge-test-'));
}

function randomRows(count: number, dim: number): Float64Array[] {
  return Array.from({ length: count }, (_, r) =>
    Float64Array.from({ length: dim }, (_, c) => Math.sin(r * 31 + c * 7) * 2.5),
  );
}

describe('embedding archive', () => {
  it('round-trips matrix bytes exactly', () => {
    const dir = join(tempDir(), 'arch');
    const rows = randomRows(6, 5);
    const records = rows.map((_, i) => ({
      stimulus: `s${i % 3}`,
      sentence_id: 100 + i,
      word_count: 4 * (i + 1),
    }));
    writeArchive(dir, rows, records, 5);
    const loaded = readArchive(dir);
    expect(loaded.manifest.count).toBe(6);
    expect(loaded.manifest.dim).toBe(5);
    expect(loaded.manifest.dtype).toBe('f32le');
    for (let r = 0; r < rows.length; r++) {
      const row = archiveRow(loaded, r);
      for (let c = 0; c < 5; c++) {
        expect(row[c]).toBe(Math.fround(rows[r][c]));
      }
    }
    // writing the loaded values again reproduces identical bytes
    const dir2 = join(tempDir(), 'arch2');
    const rows2 = loaded.manifest.records.map((rec) =>
      Float32Array.from(archiveRow(loaded, rec.row)),
    );
    writeArchive(
      dir2,
      rows2,
      loaded.manifest.records.map(({ stimulus, sentence_id, word_count }) => ({
        stimulus,
        sentence_id,
        word_count,
      })),
      5,
    );
    expect(readFileSync(join(dir2, 'matrix.bin'))).toEqual(readFileSync(join(dir, 'matrix.bin')));
    expect(readFileSync(join(dir2, 'manifest.json'))).toEqual(
      readFileSync(join(dir, 'manifest.json')),
    );
  });

  it('manifest count/dim always agree with matrix byte length', () => {
    for (const [count, dim] of [
      [1, 1],
      [3, 7],
      [10, 16],
    ] as const) {
      const dir = join(tempDir(), 'arch');
      writeArchive(
        dir,
        randomRows(count, dim),
        Array.from({ length: count }, (_, i) => ({
          stimulus: 's',
          sentence_id: i,
          word_count: 5,
        })),
        dim,
      );
      const bytes = readFileSync(join(dir, 'matrix.bin'));
      expect(bytes.length).toBe(count * dim * 4);
    }
  });

  it('rejects byte-length mismatches', () => {
    const dir = join(tempDir(), 'arch');
    writeArchive(dir, randomRows(2, 3), [
      { stimulus: 'a', sentence_id: 0, word_count: 5 },
      { stimulus: 'b', sentence_id: 1, word_count: 5 },
    ], 3);
    writeFileSync(join(dir, 'matrix.bin'), Buffer.alloc(10));
    expect(() => readArchive(dir)).toThrow(/bytes/);
  });

  it('rejects misaligned manifest rows', () => {
    const dir = join(tempDir(), 'arch');
    writeArchive(dir, randomRows(2, 3), [
      { stimulus: 'a', sentence_id: 0, word_count: 5 },
      { stimulus: 'b', sentence_id: 1, word_count: 5 },
    ], 3);
    const manifest = JSON.parse(readFileSync(join(dir, 'manifest.json'), 'utf-8'));
    manifest.records[1].row = 9;
    writeFileSync(join(dir, 'manifest.json'), JSON.stringify(manifest));
    expect(() => readArchive(dir)).toThrow(/row/);
  });

  it('rejects inconsistent row widths at serialization', () => {
    expect(() => serializeMatrix([new Float64Array(3), new Float64Array(4)], 3)).toThrow(
      /components/,
    );
  });
});
