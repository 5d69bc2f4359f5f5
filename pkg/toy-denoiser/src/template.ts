// The training-sample grammar shared with the corpus builder:
//   <BOS><input text>\n<target JSON><EOS>
// One sample spans two physical lines of the corpus file because the
// separator is a real newline.

export const BOS_MARK = "<BOS>";
export const EOS_MARK = "<EOS>";

export class TemplateViolation extends Error {}

export interface Sample {
  inputText: string;
  targetText: string;
}

export function parseSample(rendered: string, bos = BOS_MARK, eos = EOS_MARK): Sample {
  const text = rendered.replace(/[\r\n]+$/, "");
  if (!text.startsWith(bos)) throw new TemplateViolation(`missing ${bos} sentinel`);
  if (!text.endsWith(eos)) throw new TemplateViolation(`missing ${eos} sentinel`);
  const body = text.slice(bos.length, text.length - eos.length);
  const sep = body.indexOf("\n");
  if (sep < 0) throw new TemplateViolation("missing input/target separator");
  const inputText = body.slice(0, sep);
  const targetText = body.slice(sep + 1);
  if (targetText.includes("\n")) throw new TemplateViolation("more than one separator");
  let parsed: unknown;
  try {
    parsed = JSON.parse(targetText);
  } catch {
    throw new TemplateViolation("target is not valid JSON");
  }
  if (
    typeof parsed !== "object" || parsed === null || Array.isArray(parsed) ||
    typeof (parsed as Record<string, unknown>)["category"] !== "string" ||
    (parsed as Record<string, unknown>)["category"] === ""
  ) {
    throw new TemplateViolation("target is not a structured object");
  }
  return { inputText, targetText };
}

export function renderSample(sample: Sample, bos = BOS_MARK, eos = EOS_MARK): string {
  return `${bos}${sample.inputText}\n${sample.targetText}${eos}`;
}

/** Read every sample of a corpus file (two physical lines per sample). */
export function parseCorpus(text: string): Sample[] {
  const lines = text.split("\n");
  if (lines[lines.length - 1] === "") lines.pop();
  if (lines.length % 2 !== 0) {
    throw new TemplateViolation("corpus ends mid-sample (odd line count)");
  }
  const samples: Sample[] = [];
  for (let i = 0; i < lines.length; i += 2) {
    samples.push(parseSample(lines[i] + "\n" + lines[i + 1]));
  }
  return samples;
}
