// Typed client for the diagnosis service.  The UI performs no inference of
// its own: everything it shows comes verbatim out of these payloads.

export interface Exercise {
  id: string;
  source_language: string;
  source_text: string;
  lexical_scope: string[];
}

export interface Chip {
  literal: string;
  label: string;
}

export interface PrepPair {
  language: string;
  literal: string;
  located: boolean;
}

export interface WordEcho {
  buckwalter: string;
  script: string;
}

export type Verdict = "accepted" | "rejected" | "no_parse" | "unknown_word";

export interface Diagnosis {
  id: string;
  verdict: Verdict;
  message: string;
  exercise_id: string | null;
  attempt_text: string | null;
  parse_count: number;
  preposition_pairs: PrepPair[];
  missing: string[];
  chips: Chip[];
  children: Record<string, string>;
  offending_token: string | null;
  words: WordEcho[];
}

export interface MismatchRecord {
  language: string;
  literal: string;
  located: boolean;
}

export interface CompareView {
  diagnosis_id: string;
  mismatches: { kind: string; source: MismatchRecord | null; attempt: MismatchRecord | null }[];
  source_facts: string[];
  attempt_facts: string[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class StaleError extends ApiError {}

async function readJson(response: Response): Promise<unknown> {
  try {
    return await response.json();
  } catch {
    throw new ApiError(response.status, "bad JSON from service");
  }
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async exercises(): Promise<Exercise[]> {
    const r = await fetch(this.url("/api/exercises"));
    if (!r.ok) throw new ApiError(r.status, "failed to list exercises");
    return (await readJson(r)) as Exercise[];
  }

  async buckwalterTable(): Promise<[string, string][]> {
    const r = await fetch(this.url("/api/buckwalter"));
    if (!r.ok) throw new ApiError(r.status, "failed to fetch table");
    const body = (await readJson(r)) as { pairs: [string, string][] };
    return body.pairs;
  }

  // 200 and 422 both carry a diagnosis; anything else is an error
  async diagnose(session: string, exerciseId: string, text: string): Promise<Diagnosis> {
    const r = await fetch(this.url("/api/diagnose"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ session, exercise_id: exerciseId, text }),
    });
    if (r.status === 200 || r.status === 422) {
      return (await readJson(r)) as Diagnosis;
    }
    throw new ApiError(r.status, `diagnose failed (${r.status})`);
  }

  async why(session: string, diagnosisId: string, missingLiteral: string): Promise<Diagnosis> {
    const r = await fetch(this.url("/api/why"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ session, diagnosis_id: diagnosisId, missing_literal: missingLiteral }),
    });
    if (r.status === 404) throw new StaleError(404, "diagnosis no longer available");
    if (!r.ok) throw new ApiError(r.status, `why failed (${r.status})`);
    return (await readJson(r)) as Diagnosis;
  }

  async compare(session: string, diagnosisId: string): Promise<CompareView> {
    const params = new URLSearchParams({ session, diagnosis_id: diagnosisId });
    const r = await fetch(this.url(`/api/compare?${params}`));
    if (r.status === 404) throw new StaleError(404, "diagnosis no longer available");
    if (!r.ok) throw new ApiError(r.status, `compare failed (${r.status})`);
    return (await readJson(r)) as CompareView;
  }
}
