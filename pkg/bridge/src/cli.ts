/**
 * embed-bridge CLI.
 *
 *   embed-bridge dump-words     --records store.jsonl --out-dir archive/ [--config cfg.json]
 *   embed-bridge dump-sentences --sentences sents.jsonl --out-dir archive/ [--config cfg.json]
 *   embed-bridge answer         --queries queries.jsonl --out answers.jsonl [--config cfg.json]
 *
 * The config file mirrors BridgeConfig; omitted fields use the stub defaults.
 */
import { readFileSync } from 'node:fs';
import { parseArgs } from 'node:util';

import { answerQueries, dumpSentenceEmbeddings, dumpWordEmbeddings, readJsonl, writeJsonl } from './bridge.js';
import { DEFAULT_CONFIG } from './types.js';
import type { BridgeConfig, ProbQuery, SentenceRecord } from './types.js';

function loadConfig(path?: string): BridgeConfig {
  if (!path) return { ...DEFAULT_CONFIG };
  const parsed = JSON.parse(readFileSync(path, 'utf-8')) as Partial<BridgeConfig>;
  return { ...DEFAULT_CONFIG, ...parsed };
}

function fail(message: string): never {
  process.stderr.write(`embed-bridge: error: ${message}\n`);
  process.exit(2);
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  const { values } = parseArgs({
    args: rest,
    options: {
      config: { type: 'string' },
      records: { type: 'string' },
      sentences: { type: 'string' },
      queries: { type: 'string' },
      out: { type: 'string' },
      'out-dir': { type: 'string' },
    },
  });
  const config = loadConfig(values.config);

  if (command === 'dump-words') {
    if (!values.records || !values['out-dir']) fail('dump-words needs --records and --out-dir');
    const records = readJsonl<SentenceRecord>(values.records);
    const result = dumpWordEmbeddings(records, config, values['out-dir']);
    process.stderr.write(
      `dump-words: ${result.rows} rows, ${result.skipped.length} skipped\n`,
    );
    for (const skip of result.skipped) {
      process.stderr.write(
        `  skipped sentence ${skip.sentence_id} (${skip.stimulus}): ${skip.reason}\n`,
      );
    }
    return 0;
  }
  if (command === 'dump-sentences') {
    if (!values.sentences || !values['out-dir']) {
      fail('dump-sentences needs --sentences and --out-dir');
    }
    const sentences = readJsonl<SentenceRecord>(values.sentences);
    const result = dumpSentenceEmbeddings(sentences, config, values['out-dir']);
    process.stderr.write(`dump-sentences: ${result.rows} rows (${config.sentence_pooling})\n`);
    return 0;
  }
  if (command === 'answer') {
    if (!values.queries || !values.out) fail('answer needs --queries and --out');
    const queries = readJsonl<ProbQuery>(values.queries);
    const answers = answerQueries(queries, config);
    writeJsonl(values.out, answers);
    const failures = answers.filter((a) => 'error' in a).length;
    process.stderr.write(`answer: ${answers.length} answers, ${failures} failures\n`);
    return 0;
  }
  fail(`unknown command ${JSON.stringify(command ?? '')}; use dump-words, dump-sentences, or answer`);
}

main(process.argv.slice(2));
