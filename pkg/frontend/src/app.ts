/** Wires the batch flow, the send queue and the report view to the page. */

import {
  Client,
  LabelQueue,
  type Label,
  type PendingLabel,
  type QueueState,
  type Report,
} from "./api.js";
import { BatchFlow, keyToLabel } from "./flow.js";
import { GUIDELINES, SHORTCUT_HINT } from "./guidelines.js";

const REPORT_REFRESH_MS = 5000;

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

export class App {
  private flow: BatchFlow | null = null;
  private queue: LabelQueue;
  private reportTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private client: Client, private annotatorId: string) {
    this.queue = new LabelQueue(client, {
      onState: (state) => this.renderStatus(state),
      onReject: (entry, message) => this.renderRejection(entry, message),
    });
  }

  async start(): Promise<void> {
    const items = await this.client.batch(this.annotatorId);
    this.flow = new BatchFlow(items);
    this.bindButtons();
    this.bindKeys();
    this.bindPanels();
    this.renderStatus(this.queue.state);
    if (this.flow.done) {
      await this.showReport();
    } else {
      this.renderItem();
    }
  }

  private bindButtons(): void {
    const buttons = el<HTMLElement>("label-buttons")
      .querySelectorAll<HTMLButtonElement>("button[data-label]");
    buttons.forEach((button) => {
      button.addEventListener("click", () => {
        this.applyLabel(button.dataset.label as Label);
      });
    });
    el<HTMLButtonElement>("retry-button").addEventListener("click", () => {
      this.queue.retryNow();
    });
  }

  private bindKeys(): void {
    document.addEventListener("keydown", (e) => {
      if (e.ctrlKey || e.metaKey || e.altKey) {
        return;
      }
      if (e.target instanceof HTMLInputElement ||
          e.target instanceof HTMLTextAreaElement) {
        return;
      }
      const label = keyToLabel(e.key);
      if (label === null || this.flow === null || this.flow.done) {
        return;
      }
      if (el<HTMLElement>("item-view").hidden) {
        return;
      }
      e.preventDefault();
      this.applyLabel(label);
    });
  }

  private bindPanels(): void {
    const panel = el<HTMLElement>("guidelines");
    this.renderGuidelines(panel);
    el<HTMLButtonElement>("guidelines-toggle").addEventListener("click", () => {
      panel.hidden = !panel.hidden;
    });
    el<HTMLButtonElement>("report-toggle").addEventListener("click", () => {
      const view = el<HTMLElement>("report-view");
      if (view.hidden) {
        void this.showReport();
      } else if (this.flow !== null && !this.flow.done) {
        this.hideReport();
        this.renderItem();
      }
    });
  }

  private applyLabel(label: Label): void {
    if (this.flow === null || this.flow.done) {
      return;
    }
    const item = this.flow.label(label);
    this.queue.push({
      record_id: item.record_id,
      annotator_id: this.annotatorId,
      label: label,
    });
    if (this.flow.done) {
      void this.showReport();
    } else {
      this.renderItem();
    }
  }

  private renderItem(): void {
    const flow = this.flow;
    if (flow === null || flow.current === null) {
      return;
    }
    this.hideReport();
    el<HTMLElement>("item-view").hidden = false;
    // textContent on purpose: sentences are shown exactly as mined.
    el<HTMLElement>("sentence").textContent = flow.current.sentence;
    el<HTMLElement>("context-text").textContent =
      flow.current.context_excerpt || "(no context available)";
    el<HTMLDetailsElement>("context-box").open = false;
    const { labeled, total } = flow.progress();
    el<HTMLElement>("progress-fill").style.width =
      total > 0 ? `${(100 * labeled) / total}%` : "0%";
    el<HTMLElement>("progress-text").textContent =
      `${labeled} of ${total} labeled`;
  }

  private renderStatus(state: QueueState): void {
    const line = el<HTMLElement>("queue-status");
    const retry = el<HTMLButtonElement>("retry-button");
    if (state.pending === 0) {
      line.textContent = "All labels saved.";
      line.className = "ok";
      retry.hidden = true;
    } else if (state.retrying) {
      line.textContent =
        `Connection lost. ${state.pending} unsent ` +
        `label${state.pending === 1 ? "" : "s"} kept, retrying shortly.`;
      line.className = "warn";
      retry.hidden = false;
    } else {
      line.textContent = `Sending ${state.pending} ` +
        `label${state.pending === 1 ? "" : "s"}.`;
      line.className = "busy";
      retry.hidden = true;
    }
  }

  private renderRejection(entry: PendingLabel, message: string): void {
    const line = el<HTMLElement>("reject-status");
    line.textContent =
      `The server rejected the label for ${entry.record_id}: ${message}`;
    line.hidden = false;
  }

  private async showReport(): Promise<void> {
    el<HTMLElement>("item-view").hidden = true;
    const view = el<HTMLElement>("report-view");
    view.hidden = false;
    try {
      const report = await this.client.report();
      this.renderReport(view, report);
    } catch {
      view.replaceChildren();
      const note = document.createElement("p");
      note.textContent = "Could not load the report. Retrying shortly.";
      note.className = "warn";
      view.append(note);
    }
    // Keep the numbers live while other annotators submit.
    if (this.reportTimer !== null) {
      clearTimeout(this.reportTimer);
    }
    this.reportTimer = setTimeout(() => {
      if (!view.hidden) {
        void this.showReport();
      }
    }, REPORT_REFRESH_MS);
  }

  private hideReport(): void {
    el<HTMLElement>("report-view").hidden = true;
    if (this.reportTimer !== null) {
      clearTimeout(this.reportTimer);
      this.reportTimer = null;
    }
  }

  private renderReport(view: HTMLElement, report: Report): void {
    view.replaceChildren();
    const heading = document.createElement("h2");
    heading.textContent =
      this.flow !== null && this.flow.done ? "Batch complete" : "Report";
    view.append(heading);

    const dl = document.createElement("dl");
    const pairs: [string, string][] = [
      ["Items labeled", String(report.n_items)],
      ["Labeled by two or more annotators", String(report.n_double_labeled)],
      ["Exact agreement",
       report.percent_agreement === null
         ? "not defined yet"
         : `${report.percent_agreement.toFixed(1)}%`],
      ["Cohen's kappa",
       report.kappa === null
         ? "needs exactly two annotators"
         : report.kappa.toFixed(3)],
    ];
    for (const [term, value] of pairs) {
      const dt = document.createElement("dt");
      dt.textContent = term;
      const dd = document.createElement("dd");
      dd.textContent = value;
      dl.append(dt, dd);
    }
    view.append(dl);

    const distHeading = document.createElement("h3");
    distHeading.textContent = "Label distribution";
    view.append(distHeading);
    for (const [label, share] of Object.entries(report.distribution)) {
      const row = document.createElement("div");
      row.className = "dist-row";
      const name = document.createElement("span");
      name.className = "dist-label";
      name.textContent = label;
      const track = document.createElement("span");
      track.className = "dist-track";
      const bar = document.createElement("span");
      bar.className = "dist-bar";
      bar.style.width = `${share}%`;
      track.append(bar);
      const pct = document.createElement("span");
      pct.className = "dist-pct";
      pct.textContent = `${share.toFixed(1)}%`;
      row.append(name, track, pct);
      view.append(row);
    }
  }

  private renderGuidelines(panel: HTMLElement): void {
    panel.replaceChildren();
    const heading = document.createElement("h2");
    heading.textContent = "How to label";
    panel.append(heading);
    for (const section of GUIDELINES) {
      const title = document.createElement("h3");
      title.textContent = section.title;
      const body = document.createElement("p");
      body.textContent = section.body;
      panel.append(title, body);
      const list = document.createElement("ul");
      for (const example of section.examples) {
        const entry = document.createElement("li");
        const quote = document.createElement("em");
        quote.textContent = example.text;
        entry.append(quote, ` → ${example.label}`);
        list.append(entry);
      }
      panel.append(list);
    }
    const hint = document.createElement("p");
    hint.className = "hint";
    hint.textContent = SHORTCUT_HINT;
    panel.append(hint);
  }
}
