// Word-level script <-> Buckwalter toggle for the input box, built from the
// service-provided table.  No client-side morphology: unknown words pass
// through untouched.

export class BuckwalterToggle {
  private toScriptMap = new Map<string, string>();
  private toBwMap = new Map<string, string>();

  constructor(pairs: [string, string][]) {
    for (const [script, bw] of pairs) {
      this.toScriptMap.set(bw, script);
      this.toBwMap.set(script, bw);
    }
  }

  private convert(text: string, map: Map<string, string>): string {
    return text
      .split(/(\s+)/)
      .map((part) => {
        if (/^\s+$/.test(part) || part === "") return part;
        const m = part.match(/^(.*?)([.?!,;:]*)$/);
        const word = m?.[1] ?? part;
        const punct = m?.[2] ?? "";
        return (map.get(word) ?? word) + punct;
      })
      .join("");
  }

  toScript(text: string): string {
    return this.convert(text, this.toScriptMap);
  }

  toBuckwalter(text: string): string {
    return this.convert(text, this.toBwMap);
  }
}
