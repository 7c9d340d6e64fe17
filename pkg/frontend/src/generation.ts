/**
 * Dummy generation loop: random logits run through the guard as a logits
 * hook, mirroring how a real decoder would wire it in. The loop never looks
 * inside the mask; it just samples from whatever logits come back.
 */

import { readFileSync } from 'node:fs';
import type { GuardHandle, RegionEvent } from './client.js';

/** Deterministic 32-bit PRNG (mulberry32) so runs are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface VocabEntry {
  id: number;
  text: string;
}

/** Parse a pkgguard vocabulary export (JSON lines, trailing meta object). */
export function loadVocab(path: string): { tokens: string[]; eosId: number | null } {
  const tokens: string[] = [];
  let eosId: number | null = null;
  for (const line of readFileSync(path, 'utf-8').split('\n')) {
    if (!line.trim()) continue;
    const obj = JSON.parse(line) as Partial<VocabEntry> & { eos?: number };
    if (typeof obj.id === 'number' && typeof obj.text === 'string') {
      tokens[obj.id] = obj.text;
    } else if (typeof obj.eos === 'number') {
      eosId = obj.eos;
    }
  }
  return { tokens, eosId };
}

export interface GenerationResult {
  text: string;
  tokenIds: number[];
  events: RegionEvent[];
}

/**
 * Decode up to maxTokens through a guard handle. A forced script prefix
 * (spelled one character per token) steers the stream into an install
 * context; after that, sampling is greedy over the masked logits.
 */
export async function generate(
  handle: GuardHandle,
  tokens: string[],
  script: string,
  seed: number,
  maxTokens = 48,
): Promise<GenerationResult> {
  const charToId = new Map<string, number>();
  tokens.forEach((text, id) => {
    if (text.length === 1 && !charToId.has(text)) charToId.set(text, id);
  });
  const forced: number[] = [];
  for (const ch of script) {
    const id = charToId.get(ch);
    if (id === undefined) throw new Error(`script character ${JSON.stringify(ch)} not in vocabulary`);
    forced.push(id);
  }

  const rng = mulberry32(seed);
  const pieces: string[] = [];
  const tokenIds: number[] = [];
  const events: RegionEvent[] = [];
  let delta: number[] = [];

  for (let step = 0; step < maxTokens; step++) {
    const logits = new Array<number>(tokens.length);
    for (let i = 0; i < logits.length; i++) {
      logits[i] = rng() * 10 - 5;
      // nudge toward name-ish tokens so episodes actually finish names
      if (tokens[i] && /^[a-z0-9-]+$/.test(tokens[i])) logits[i] += 3;
      if (tokens[i] === ' ' || tokens[i] === '\n') logits[i] += 5;
    }
    const result = await handle.processLogits(delta, logits);
    events.push(...result.events);
    if (result.done) break;

    let tokenId: number;
    if (step < forced.length) {
      tokenId = forced[step];
    } else {
      tokenId = 0;
      for (let i = 1; i < result.logits.length; i++) {
        if (result.logits[i] > result.logits[tokenId]) tokenId = i;
      }
    }
    tokenIds.push(tokenId);
    pieces.push(tokens[tokenId]);
    delta = [tokenId];
  }
  return { text: pieces.join(''), tokenIds, events };
}
