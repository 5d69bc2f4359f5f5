// Lossless word-level tokenizer over corpus text.
//
// Every piece of a string is a word (with its single leading space
// folded in, when present), a run of JSON structural characters, or a
// leftover whitespace run; concatenating the tokens reproduces the text
// exactly. That matters: decoded outputs must be byte-valid JSON object
// lines. Folding the space keeps sequences short.

const TOKEN_RE = / ?[^\s{}\[\]":,]+|[{}\[\]":,]+|\s+/g;

export const BOS = "<bos>";
export const SEP = "<sep>";
export const EOS = "<eos>";
export const UNK = "<unk>";
const SPECIALS = [BOS, SEP, EOS, UNK];

export function lex(text: string): string[] {
  if (text === "") return [];
  return text.match(TOKEN_RE) as string[];
}

export class Tokenizer {
  readonly idOf: Map<string, number>;
  readonly tokens: string[];

  constructor(tokens: string[]) {
    this.tokens = tokens;
    this.idOf = new Map(tokens.map((t, i) => [t, i]));
    for (const special of SPECIALS) {
      if (!this.idOf.has(special)) throw new Error(`vocabulary lacks ${special}`);
    }
  }

  static fromCorpus(texts: Iterable<string>): Tokenizer {
    const seen = new Set<string>();
    for (const text of texts) {
      for (const token of lex(text)) seen.add(token);
    }
    return new Tokenizer([...SPECIALS, ...[...seen].sort()]);
  }

  get size(): number {
    return this.tokens.length;
  }

  get bosId(): number {
    return this.idOf.get(BOS)!;
  }

  get sepId(): number {
    return this.idOf.get(SEP)!;
  }

  get eosId(): number {
    return this.idOf.get(EOS)!;
  }

  encodeText(text: string): number[] {
    const unk = this.idOf.get(UNK)!;
    return lex(text).map((t) => this.idOf.get(t) ?? unk);
  }

  /** Full training sequence: <bos> input <sep> target <eos>. */
  encodeSample(inputText: string, targetText: string): number[] {
    return [
      this.bosId,
      ...this.encodeText(inputText),
      this.sepId,
      ...this.encodeText(targetText),
      this.eosId,
    ];
  }

  decode(ids: number[]): string {
    let out = "";
    for (const id of ids) {
      const token = this.tokens[id];
      if (token === undefined || SPECIALS.includes(token)) continue;
      out += token;
    }
    return out;
  }
}
