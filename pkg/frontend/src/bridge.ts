/**
 * Subprocess oracle speaking a JSONL protocol: one request object per
 * stdin line, one response object per stdout line, same order, ids echoed.
 * stdout carries protocol lines only — anything the framework prints via
 * console.log is rerouted to stderr before the framework is loaded.
 */

// Must run before the framework import below: tfjs prints a platform
// banner through console.log, which would corrupt the stdout protocol.
console.log = (...params: unknown[]) => {
  console.error(...params);
};

import * as readline from 'readline';

import { runOp } from './ops';
import { BridgeRequest, BridgeResponse } from './types';

function respond(resp: BridgeResponse): void {
  process.stdout.write(JSON.stringify(resp) + '\n');
}

function handleLine(line: string): void {
  if (line.trim() === '') {
    return;
  }
  let req: BridgeRequest;
  try {
    req = JSON.parse(line);
  } catch {
    respond({ id: -1, valid: false, error: 'MALFORMED' });
    return;
  }
  if (
    typeof req !== 'object' ||
    req === null ||
    typeof req.id !== 'number' ||
    typeof req.op !== 'string' ||
    !Array.isArray(req.args)
  ) {
    respond({ id: typeof req?.id === 'number' ? req.id : -1, valid: false, error: 'MALFORMED' });
    return;
  }
  const result = runOp(req.op, req.args);
  respond({ id: req.id, valid: result.valid, ...(result.error !== undefined ? { error: result.error } : {}) });
}

function main(): void {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on('line', handleLine);
}

if (require.main === module) {
  main();
}
