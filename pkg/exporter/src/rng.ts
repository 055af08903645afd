/**
 * Seeded pseudo-random numbers for weight generation.
 *
 * Inference must be reproducible bit for bit across runs and machines,
 * so model weights come from a fixed-seed generator built only on
 * uint32 arithmetic: splitmix32 expands one integer seed into stream
 * state, sfc32 produces the stream. Both are standard public-domain
 * constructions.
 */

/** One splitmix32 step; mutates nothing, returns the next state and output. */
function splitmix32(state: number): [number, number] {
  let z = (state + 0x9e3779b9) >>> 0;
  let t = z;
  t = Math.imul(t ^ (t >>> 16), 0x21f0aaad);
  t = Math.imul(t ^ (t >>> 15), 0x735a2d97);
  t = (t ^ (t >>> 15)) >>> 0;
  return [z, t];
}

/** sfc32 generator over four seed words; returns floats in [0, 1). */
export function sfc32(a: number, b: number, c: number, d: number): () => number {
  let s0 = a >>> 0;
  let s1 = b >>> 0;
  let s2 = c >>> 0;
  let s3 = d >>> 0;
  return () => {
    const t = (s0 + s1) >>> 0;
    s0 = s1 ^ (s1 >>> 9);
    s1 = (s2 + (s2 << 3)) >>> 0;
    s2 = ((s2 << 21) | (s2 >>> 11)) >>> 0;
    const out = (t + s3) >>> 0;
    s3 = (s3 + 1) >>> 0;
    s0 = (s0 + out) >>> 0;
    return out / 4294967296;
  };
}

/** Expand one integer seed into an sfc32 stream. */
export function seededRng(seed: number): () => number {
  let state = seed >>> 0;
  const words: number[] = [];
  for (let i = 0; i < 4; i++) {
    const [next, word] = splitmix32(state);
    state = next;
    words.push(word);
  }
  const rng = sfc32(words[0], words[1], words[2], words[3]);
  // discard the correlated warmup draws
  for (let i = 0; i < 12; i++) rng();
  return rng;
}
