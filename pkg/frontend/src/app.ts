import { ApiClient, ApiError, Diagnosis, Exercise, StaleError } from "./api.js";
import { BuckwalterToggle } from "./buckwalter.js";
import { DiagnosisNode, UiState, freshState } from "./state.js";

// The whole interface is built here so the test harness and index.html see
// exactly the same DOM.  Requests are serialized per session (the submit
// and why handlers no-op while one is in flight) to match the service's
// single-writer-per-session contract.

export class App {
  readonly state: UiState;
  private toggle: BuckwalterToggle = new BuckwalterToggle([]);

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    sessionId?: string,
  ) {
    this.state = freshState(sessionId ?? `ui-${Math.random().toString(36).slice(2)}`);
  }

  async start(): Promise<void> {
    this.buildShell();
    try {
      this.state.exercises = await this.api.exercises();
      this.toggle = new BuckwalterToggle(await this.api.buckwalterTable());
    } catch (e) {
      this.showBanner("The service is unreachable. Retry?", true);
      return;
    }
    this.renderExercises();
    if (this.state.exercises.length > 0) {
      this.selectExercise(this.state.exercises[0]!.id);
    }
  }

  // -- shell ---------------------------------------------------------------

  private buildShell(): void {
    this.root.innerHTML = "";
    const make = <K extends keyof HTMLElementTagNameMap>(
      tag: K,
      id: string,
      parent: HTMLElement,
    ): HTMLElementTagNameMap[K] => {
      const el = document.createElement(tag);
      el.id = id;
      parent.appendChild(el);
      return el;
    };

    const title = make("h1", "title", this.root);
    title.textContent = "Preposition tutor";

    const banner = make("div", "banner", this.root);
    banner.hidden = true;

    const exArea = make("section", "exercise-area", this.root);
    const select = make("select", "exercise-select", exArea);
    select.addEventListener("change", () => this.selectExercise(select.value));
    make("p", "source-text", exArea);

    const attempt = make("section", "attempt-area", this.root);
    const input = make("input", "attempt-input", attempt);
    input.dir = "auto";
    input.placeholder = "اكتب الترجمة (or type Buckwalter)";
    input.addEventListener("input", () => {
      this.state.attemptText = input.value;
    });
    const toggleBtn = make("button", "toggle-script", attempt);
    toggleBtn.textContent = "إلى العربية";
    toggleBtn.addEventListener("click", () => this.flipScript());
    const submit = make("button", "submit-btn", attempt);
    submit.textContent = "Check";
    submit.addEventListener("click", () => {
      void this.submit();
    });

    make("section", "verdict-area", this.root);

    const historyArea = make("section", "history-area", this.root);
    const h2 = document.createElement("h2");
    h2.textContent = "Attempts";
    historyArea.appendChild(h2);
    make("ol", "history", historyArea);

    const teacher = make("label", "teacher-label", this.root);
    const box = document.createElement("input");
    box.type = "checkbox";
    box.id = "teacher-mode";
    box.addEventListener("change", () => {
      this.state.teacherMode = box.checked;
      this.state.inspectorVisible = false;
      this.renderInspectorButton();
    });
    teacher.appendChild(box);
    teacher.appendChild(document.createTextNode(" teacher mode"));

    make("div", "inspector-controls", this.root);
    const inspector = make("section", "inspector", this.root);
    inspector.hidden = true;
  }

  private byId<T extends HTMLElement>(id: string): T {
    const el = this.root.querySelector(`#${id}`);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
  }

  private showBanner(text: string, retry: boolean): void {
    const banner = this.byId<HTMLDivElement>("banner");
    banner.hidden = false;
    banner.textContent = "";
    const span = document.createElement("span");
    span.textContent = text;
    banner.appendChild(span);
    if (retry) {
      const btn = document.createElement("button");
      btn.id = "retry-btn";
      btn.textContent = "Retry";
      btn.addEventListener("click", () => {
        banner.hidden = true;
        void this.start();
      });
      banner.appendChild(btn);
    }
    this.state.banner = text;
  }

  // -- exercises -------------------------------------------------------------

  private renderExercises(): void {
    const select = this.byId<HTMLSelectElement>("exercise-select");
    select.innerHTML = "";
    for (const ex of this.state.exercises) {
      const opt = document.createElement("option");
      opt.value = ex.id;
      opt.textContent = `${ex.id}: ${ex.source_text}`;
      select.appendChild(opt);
    }
  }

  selectExercise(id: string): void {
    const ex = this.state.exercises.find((e) => e.id === id) ?? null;
    this.state.current = ex;
    this.state.tree = null;
    this.byId<HTMLSelectElement>("exercise-select").value = id;
    this.byId<HTMLParagraphElement>("source-text").textContent = ex ? ex.source_text : "";
    this.renderVerdict();
  }

  // -- attempt input -----------------------------------------------------------

  setAttempt(text: string): void {
    this.state.attemptText = text;
    this.byId<HTMLInputElement>("attempt-input").value = text;
  }

  flipScript(): void {
    this.state.scriptMode = !this.state.scriptMode;
    const converted = this.state.scriptMode
      ? this.toggle.toScript(this.state.attemptText)
      : this.toggle.toBuckwalter(this.state.attemptText);
    this.setAttempt(converted);
    this.byId<HTMLButtonElement>("toggle-script").textContent = this.state.scriptMode
      ? "to Buckwalter"
      : "إلى العربية";
  }

  // -- diagnose ------------------------------------------------------------------

  async submit(): Promise<Diagnosis | null> {
    const ex = this.state.current;
    if (!ex || this.state.busy || !this.state.attemptText.trim()) return null;
    this.state.busy = true;
    try {
      const diagnosis = await this.api.diagnose(
        this.state.sessionId,
        ex.id,
        this.state.attemptText,
      );
      this.state.tree = { diagnosis, children: new Map() };
      this.state.history.push({
        exerciseId: ex.id,
        attempt: this.state.attemptText,
        verdict: diagnosis.verdict,
      });
      this.renderVerdict();
      this.renderHistory();
      return diagnosis;
    } catch (e) {
      if (e instanceof ApiError) this.showBanner("The service is unreachable. Retry?", true);
      return null;
    } finally {
      this.state.busy = false;
    }
  }

  async drillDown(node: DiagnosisNode, literal: string): Promise<DiagnosisNode | null> {
    if (this.state.busy) return null;
    const cached = node.children.get(literal);
    if (cached) return cached;
    this.state.busy = true;
    try {
      const child = await this.api.why(this.state.sessionId, node.diagnosis.id, literal);
      const childNode: DiagnosisNode = { diagnosis: child, children: new Map() };
      node.children.set(literal, childNode);
      this.renderVerdict();
      return childNode;
    } catch (e) {
      if (e instanceof StaleError) {
        this.showBanner("This diagnosis is stale. Please resubmit your attempt.", false);
      } else if (e instanceof ApiError) {
        this.showBanner("The service is unreachable. Retry?", true);
      }
      return null;
    } finally {
      this.state.busy = false;
    }
  }

  // -- rendering --------------------------------------------------------------------

  private renderVerdict(): void {
    const area = this.byId<HTMLElement>("verdict-area");
    area.innerHTML = "";
    if (this.state.tree) {
      area.appendChild(this.renderNode(this.state.tree));
    }
    this.renderInspectorButton();
    if (this.state.inspectorVisible) void this.renderInspector();
  }

  private renderNode(node: DiagnosisNode): HTMLElement {
    const d = node.diagnosis;
    const card = document.createElement("div");
    card.className = `card verdict-${d.verdict}`;

    const message = document.createElement("p");
    message.className = "message";
    message.textContent = d.message; // verbatim service string
    card.appendChild(message);

    if (d.verdict === "unknown_word" && d.offending_token) {
      const tok = document.createElement("p");
      tok.className = "offending-token";
      tok.textContent = d.offending_token;
      card.appendChild(tok);
    }

    // missing-property chips are the drill-down handles; they exist only
    // under a rejected verdict
    if (d.verdict === "rejected") {
      for (const chip of d.chips) {
        const row = document.createElement("div");
        row.className = "chip";
        row.dataset["literal"] = chip.literal;

        const label = document.createElement("span");
        label.className = "chip-label";
        label.textContent = chip.label;
        row.appendChild(label);

        const why = document.createElement("button");
        why.className = "chip-why";
        why.textContent = "why?";
        why.addEventListener("click", () => {
          void this.drillDown(node, chip.literal);
        });
        row.appendChild(why);

        const childNode = node.children.get(chip.literal);
        if (childNode) {
          const holder = document.createElement("div");
          holder.className = "chip-child";
          holder.appendChild(this.renderNode(childNode));
          row.appendChild(holder);
        }
        card.appendChild(row);
      }
    }
    return card;
  }

  private renderHistory(): void {
    const list = this.byId<HTMLOListElement>("history");
    list.innerHTML = "";
    for (const entry of this.state.history) {
      const li = document.createElement("li");
      li.textContent = `${entry.exerciseId}: ${entry.attempt} [${entry.verdict}]`;
      list.appendChild(li);
    }
  }

  private renderInspectorButton(): void {
    const controls = this.byId<HTMLDivElement>("inspector-controls");
    controls.innerHTML = "";
    const inspector = this.byId<HTMLElement>("inspector");
    if (!this.state.teacherMode || !this.state.tree) {
      inspector.hidden = true;
      return;
    }
    const btn = document.createElement("button");
    btn.id = "toggle-inspector";
    btn.textContent = this.state.inspectorVisible ? "Hide models" : "Show models";
    btn.addEventListener("click", () => {
      this.state.inspectorVisible = !this.state.inspectorVisible;
      this.renderVerdict();
    });
    controls.appendChild(btn);
    inspector.hidden = !this.state.inspectorVisible;
  }

  private async renderInspector(): Promise<void> {
    const tree = this.state.tree;
    if (!tree) return;
    const inspector = this.byId<HTMLElement>("inspector");
    inspector.hidden = false;
    inspector.innerHTML = "";
    let view;
    try {
      view = await this.api.compare(this.state.sessionId, tree.diagnosis.id);
    } catch {
      this.showBanner("Could not load the model view.", false);
      return;
    }
    const columns = document.createElement("div");
    columns.className = "columns";
    for (const [title, facts] of [
      ["source model", view.source_facts],
      ["your model", view.attempt_facts],
    ] as const) {
      const col = document.createElement("div");
      col.className = "column";
      const h = document.createElement("h3");
      h.textContent = title;
      col.appendChild(h);
      const pre = document.createElement("pre");
      for (const fact of facts) {
        const line = document.createElement("span");
        line.textContent = fact + "\n";
        if (fact.startsWith("located(")) line.className = "hl-located";
        pre.appendChild(line);
      }
      col.appendChild(pre);
      columns.appendChild(col);
    }
    inspector.appendChild(columns);

    const mlist = document.createElement("ul");
    mlist.id = "mismatches";
    for (const m of view.mismatches) {
      const li = document.createElement("li");
      li.textContent = `${m.kind}: ${m.source?.literal ?? "(none)"} vs ${m.attempt?.literal ?? "(none)"}`;
      mlist.appendChild(li);
    }
    inspector.appendChild(mlist);
  }
}
