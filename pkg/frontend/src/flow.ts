/** Batch progression: where to resume, what to show, when it is done. */

import type { Label, UiItem } from "./api.js";

/**
 * Index of the first unlabeled item at or after `from`; items.length
 * when everything from there on already carries a label.
 */
export function firstUnlabeled(items: readonly UiItem[], from = 0): number {
  for (let i = Math.max(from, 0); i < items.length; i++) {
    if (items[i].label === null) {
      return i;
    }
  }
  return items.length;
}

export function labeledCount(items: readonly UiItem[]): number {
  return items.filter((item) => item.label !== null).length;
}

const KEY_LABELS: Record<string, Label> = {
  g: "Generic",
  p: "Particular",
  u: "Unclear",
};

/** Maps a keypress to its label button; null for any other key. */
export function keyToLabel(key: string): Label | null {
  return KEY_LABELS[key.toLowerCase()] ?? null;
}

export class BatchFlow {
  readonly items: UiItem[];
  cursor: number;

  constructor(items: UiItem[]) {
    this.items = items;
    // A reload lands on the first item this annotator has not labeled.
    this.cursor = firstUnlabeled(items);
  }

  get done(): boolean {
    return this.cursor >= this.items.length;
  }

  get current(): UiItem | null {
    return this.done ? null : this.items[this.cursor];
  }

  /**
   * Applies the label to the shown item and advances to the next
   * unlabeled one. Returns the item that was labeled.
   */
  label(label: Label): UiItem {
    if (this.done) {
      throw new Error("batch is already complete");
    }
    const item = this.items[this.cursor];
    item.label = label;
    this.cursor = firstUnlabeled(this.items, this.cursor + 1);
    return item;
  }

  progress(): { labeled: number; total: number } {
    return { labeled: labeledCount(this.items), total: this.items.length };
  }
}
