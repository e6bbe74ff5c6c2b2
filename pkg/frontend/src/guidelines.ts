/** Labeling instructions shown in the collapsible help panel. */

export interface GuidelineSection {
  title: string;
  body: string;
  examples: { text: string; label: string }[];
}

export const GUIDELINES: GuidelineSection[] = [
  {
    title: "Generic",
    body:
      "Pick Generic when the sentence claims something about a kind or " +
      "category as a whole rather than about identifiable individuals. " +
      "The category may be narrow; what matters is that the claim is not " +
      "tied to particular members. When a sentence chains several " +
      "clauses, judge only the opening one.",
    examples: [
      { text: "Owls hunt at night.", label: "Generic" },
      { text: "Owls raised in captivity live longer than wild ones.",
        label: "Generic" },
      { text: "Owls hunt at night, and the one in our barn is no exception.",
        label: "Generic" },
    ],
  },
  {
    title: "Particular",
    body:
      "Pick Particular when the sentence reports on specific individuals, " +
      "places or events, or only makes sense pointing at something " +
      "concrete nearby, such as a figure, a table or a scene.",
    examples: [
      { text: "Owls are nesting on our roof.", label: "Particular" },
      { text: "The owls in this aviary were rescued.", label: "Particular" },
      { text: "Values are given in meters.", label: "Particular" },
    ],
  },
  {
    title: "Unclear",
    body:
      "Pick Unclear when you cannot decide between the other two, when " +
      "the sentence is ungrammatical, when you would need more of the " +
      "document to judge, or when the sentence opens with material that " +
      "is not itself the general claim.",
    examples: [
      { text: "Even so, owls hunt at night.", label: "Unclear" },
    ],
  },
];

export const SHORTCUT_HINT =
  "Keyboard: G for Generic, P for Particular, U for Unclear.";
