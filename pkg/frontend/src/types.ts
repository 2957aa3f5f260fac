export type ArgValue =
  | { kind: 'tensor'; shape: number[] }
  | { kind: 'tensor_list'; shapes: number[][] }
  | { kind: 'int'; value: number }
  | { kind: 'float'; value: number }
  | { kind: 'bool'; value: boolean }
  | { kind: 'str'; value: string };

export interface BridgeRequest {
  id: number;
  op: string;
  args: ArgValue[];
}

export interface BridgeResponse {
  id: number;
  valid: boolean;
  error?: string;
}

export class ArgError extends Error {}

export function tensorShape(args: ArgValue[], i: number): number[] {
  const a = args[i];
  if (a === undefined || a.kind !== 'tensor') {
    throw new ArgError(`argument ${i}: expected tensor`);
  }
  return a.shape;
}

export function tensorListShapes(args: ArgValue[], i: number): number[][] {
  const a = args[i];
  if (a === undefined || a.kind !== 'tensor_list') {
    throw new ArgError(`argument ${i}: expected tensor_list`);
  }
  return a.shapes;
}

export function intValue(args: ArgValue[], i: number): number {
  const a = args[i];
  if (a === undefined || a.kind !== 'int' || !Number.isInteger(a.value)) {
    throw new ArgError(`argument ${i}: expected int`);
  }
  return a.value;
}
