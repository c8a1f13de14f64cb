/** Session chat view-model: answers render citations as timestamp chips
 * linking into the lesson video, plus three one-shot expansion buttons.
 * External resources carry the server's provenance label verbatim. */

import type { AnswerWire, CitationWire, TierName } from "../types.js";

export const TIERS: TierName[] = ["MoreDetails", "PracticeQuestions", "ExternalResources"];

export function formatTimestamp(startS: number): string {
  const total = Math.floor(startS);
  const minutes = Math.floor(total / 60);
  const seconds = total % 60;
  return `${minutes}:${seconds.toString().padStart(2, "0")}`;
}

export type CitationChip = {
  label: string;
  lessonId: string;
  href: string | null;
};

export function citationChip(
  citation: CitationWire,
  videoUrls: Record<string, string | null>,
): CitationChip {
  const video = videoUrls[citation.lesson_id] ?? null;
  return {
    label: formatTimestamp(citation.start_s),
    lessonId: citation.lesson_id,
    href: video ? `${video}#t=${Math.floor(citation.start_s)}` : null,
  };
}

export type ExpansionButton = {
  tier: TierName;
  label: string;
  disabled: boolean; // disabled once filled: tiers are cached, never refetched
};

export type ResourceBadge = {
  url: string;
  label: string;
  badge: string; // the server's provenance label, verbatim
};

export type AnswerView = {
  answerId: string;
  text: string;
  outOfScope: boolean;
  chips: CitationChip[];
  buttons: ExpansionButton[];
  details: string | null;
  practice: Array<{ stem: string; options: string[] }>;
  resources: ResourceBadge[];
};

const TIER_LABELS: Record<TierName, string> = {
  MoreDetails: "More Details",
  PracticeQuestions: "Practice Questions",
  ExternalResources: "External Resources",
};

export function answerView(
  answer: AnswerWire,
  videoUrls: Record<string, string | null>,
): AnswerView {
  const practiceTier = answer.expansions.PracticeQuestions;
  const resourceTier = answer.expansions.ExternalResources;
  return {
    answerId: answer.answer_id,
    text: answer.text,
    outOfScope: answer.scope_flag === "OutOfScope",
    chips: answer.citations.map((c) => citationChip(c, videoUrls)),
    buttons: TIERS.map((tier) => ({
      tier,
      label: TIER_LABELS[tier],
      disabled: tier in answer.expansions,
    })),
    details: answer.expansions.MoreDetails?.text ?? null,
    practice: (practiceTier?.items ?? []).map((item) => ({
      stem: item.stem,
      options: item.options,
    })),
    resources: (resourceTier?.resources ?? []).map((r) => ({
      url: r.url,
      label: r.label,
      badge: r.provenance_label,
    })),
  };
}
