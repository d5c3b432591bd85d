/**
 * Contextual sentence encoders. Each encoder turns a marked token sequence
 * into per-token hidden states; the exporter stores the first token's
 * hidden state as the sentence representation.
 *
 * The built-in "hashed" encoder is a deterministic random-feature model
 * (hash-seeded token vectors, sinusoidal positions, one fixed mixing
 * layer). It stands in for a large pretrained model in offline and test
 * environments; anything exposing `ContextualEncoder` can be registered.
 */

export interface ContextualEncoder {
  readonly name: string;
  readonly dim: number;
  /** hidden states, one per input token */
  encode(tokens: string[]): Float32Array[];
}

/** FNV-1a 64-bit over UTF-8, as two 32-bit halves. */
function fnv1a64(text: string): [number, number] {
  let hi = 0xcbf29ce4 | 0;
  let lo = 0x84222325 | 0;
  const bytes = Buffer.from(text, "utf-8");
  for (const b of bytes) {
    lo ^= b;
    // 64-bit multiply by the FNV prime 0x100000001b3, split into halves
    const newLo = Math.imul(lo, 0x1b3) >>> 0;
    const carry = Math.floor((lo >>> 0) * 0x1b3 / 2 ** 32);
    hi = (Math.imul(hi, 0x1b3) + lo + carry) | 0;
    lo = newLo | 0;
  }
  return [hi >>> 0, lo >>> 0];
}

/** mulberry32: small deterministic PRNG. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function hashedVector(key: string, dim: number): Float64Array {
  const [hi, lo] = fnv1a64(key);
  const rand = mulberry32(hi ^ ((lo << 13) | (lo >>> 19)));
  const out = new Float64Array(dim);
  for (let i = 0; i < dim; i++) out[i] = rand() * 2 - 1;
  return out;
}

export class HashedEncoder implements ContextualEncoder {
  readonly name: string;
  readonly dim: number;
  private readonly mixing: Float64Array; // dim x dim, row-major
  private readonly tokenCache = new Map<string, Float64Array>();

  constructor(dim = 64, name = "hashed") {
    if (dim < 1) throw new Error("encoder dim must be >= 1");
    this.dim = dim;
    this.name = name;
    this.mixing = new Float64Array(dim * dim);
    const rand = mulberry32(fnv1a64(`${name}:${dim}:mixing`)[1]);
    const scale = 1 / Math.sqrt(dim);
    for (let i = 0; i < this.mixing.length; i++) {
      this.mixing[i] = (rand() * 2 - 1) * scale;
    }
  }

  private tokenVector(token: string): Float64Array {
    let vec = this.tokenCache.get(token);
    if (!vec) {
      vec = hashedVector(`${this.name}:tok:${token}`, this.dim);
      this.tokenCache.set(token, vec);
    }
    return vec;
  }

  encode(tokens: string[]): Float32Array[] {
    if (tokens.length === 0) throw new Error("cannot encode an empty sequence");
    const dim = this.dim;
    // context vector: mean of token vectors with sinusoidal position terms
    const context = new Float64Array(dim);
    for (let p = 0; p < tokens.length; p++) {
      const vec = this.tokenVector(tokens[p]);
      for (let i = 0; i < dim; i++) {
        const angle = (p + 1) / Math.pow(10000, (2 * (i >> 1)) / dim);
        const pos = i % 2 === 0 ? Math.sin(angle) : Math.cos(angle);
        // position multiplies into the token vector so reordering tokens
        // (marker moves included) changes the pooled context
        context[i] += vec[i] * (1 + 0.3 * pos) + 0.1 * pos;
      }
    }
    for (let i = 0; i < dim; i++) context[i] /= tokens.length;

    return tokens.map((token, p) => {
      const vec = this.tokenVector(token);
      const hidden = new Float32Array(dim);
      for (let i = 0; i < dim; i++) {
        let mixed = 0;
        for (let j = 0; j < dim; j++) mixed += this.mixing[i * dim + j] * context[j];
        hidden[i] = Math.tanh(mixed + 0.5 * vec[i] + (p === 0 ? 0.25 * context[i] : 0));
      }
      return hidden;
    });
  }
}

export function makeEncoder(name: string, dim: number): ContextualEncoder {
  switch (name) {
    case "hashed":
      return new HashedEncoder(dim, name);
    default:
      throw new Error(`unknown encoder "${name}" (available: hashed)`);
  }
}
