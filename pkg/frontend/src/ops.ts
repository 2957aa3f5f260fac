/**
 * Operator adapters: each maps an abstract argument tuple onto real
 * framework calls. Tensors are materialized from their shapes with a
 * constant 0.5 fill (index tensors with integer zeros) — validity of every
 * mapped operator is shape-driven, never element-driven. An adapter that
 * returns normally means "valid"; a thrown framework error means
 * "invalid".
 */

import * as tf from '@tensorflow/tfjs';

import { ArgValue, intValue, tensorListShapes, tensorShape } from './types';

function fill(shape: number[]): tf.Tensor {
  return tf.fill(shape, 0.5);
}

export type Adapter = (args: ArgValue[]) => void;

const bmm: Adapter = (args) => {
  tf.matMul(fill(tensorShape(args, 0)), fill(tensorShape(args, 1)));
};

const dot: Adapter = (args) => {
  tf.dot(fill(tensorShape(args, 0)), fill(tensorShape(args, 1)));
};

const broadcastTo: Adapter = (args) => {
  // the second argument's shape tuple *is* the target size
  tf.broadcastTo(fill(tensorShape(args, 0)), tensorShape(args, 1));
};

const cartesianProd: Adapter = (args) => {
  // no native n-ary product; the vector requirement is exercised per
  // member through outerProduct, which only accepts 1D inputs
  for (const shape of tensorListShapes(args, 0)) {
    const t = fill(shape) as tf.Tensor1D;
    tf.outerProduct(t, t);
  }
};

const maxPool2d: Adapter = (args) => {
  const shape = tensorShape(args, 0);
  const k = intValue(args, 1);
  const stride = intValue(args, 2);
  const pad = intValue(args, 3);
  let x = fill(shape);
  // abstract layout is channels-first; the framework pools channels-last
  if (shape.length === 4) {
    x = tf.transpose(x, [0, 2, 3, 1]);
  } else if (shape.length === 3) {
    x = tf.transpose(x, [1, 2, 0]);
  }
  tf.maxPool(x as tf.Tensor3D | tf.Tensor4D, [k, k], [stride, stride], pad);
};

const topK: Adapter = (args) => {
  tf.topk(fill(tensorShape(args, 0)), intValue(args, 1));
};

const split: Adapter = (args) => {
  tf.split(fill(tensorShape(args, 0)), intValue(args, 1), intValue(args, 2));
};

const addr: Adapter = (args) => {
  const outer = tf.outerProduct(
    fill(tensorShape(args, 1)) as tf.Tensor1D,
    fill(tensorShape(args, 2)) as tf.Tensor1D,
  );
  tf.add(fill(tensorShape(args, 0)), outer);
};

const pairwiseDistance: Adapter = (args) => {
  const diff = tf.sub(fill(tensorShape(args, 0)), fill(tensorShape(args, 1)));
  tf.norm(diff, 'euclidean', -1);
};

const indexSelect: Adapter = (args) => {
  const x = fill(tensorShape(args, 0));
  const dim = intValue(args, 1);
  const indices = tf.zeros(tensorShape(args, 2), 'int32');
  tf.gather(x, indices, dim);
};

export const ADAPTERS: Record<string, Adapter> = {
  bmm,
  dot,
  broadcast_to: broadcastTo,
  cartesian_prod: cartesianProd,
  max_pool2d: maxPool2d,
  top_k: topK,
  split,
  addr,
  pairwise_distance: pairwiseDistance,
  index_select: indexSelect,
};

export function runOp(op: string, args: ArgValue[]): { valid: boolean; error?: string } {
  const adapter = ADAPTERS[op];
  if (adapter === undefined) {
    return { valid: false, error: 'UNSUPPORTED' };
  }
  try {
    tf.tidy(() => adapter(args));
    return { valid: true };
  } catch (e) {
    return { valid: false, error: e instanceof Error ? e.message : String(e) };
  }
}
