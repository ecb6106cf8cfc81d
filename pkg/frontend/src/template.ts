/**
 * Client-side copy of the attribute-sentence renderer.
 *
 * The service renders the same sentence from the same delta; keeping a
 * local copy gives the user an instant live preview while dragging
 * sliders. The parity test suite pins this file byte-for-byte against
 * sentences produced by the service, so the two renderers cannot
 * drift silently. `GET /config` also echoes the term table, which the
 * app compares against at startup as a second tripwire.
 */

/** Display names for the six attributes, in canonical order. */
export const ATTRIBUTE_LABELS = [
  "brightness",
  "saturation",
  "color variation",
  "lighting",
  "palette richness",
  "contrast",
] as const;

/** Wire names for the six attributes, in canonical order. */
export const ATTRIBUTE_NAMES = [
  "mean_brightness",
  "mean_saturation",
  "saturation_std",
  "brightness_std",
  "color_richness",
  "contrast",
] as const;

/** Per-attribute terms, band 1 (strong increase) .. band 5 (strong decrease). */
export const TERMS: readonly (readonly string[])[] = [
  ["very high", "high", "medium", "low", "very low"],
  ["intensely vibrant", "vibrant", "natural", "muted", "desaturated"],
  ["extreme", "high", "moderate", "low", "minimal"],
  ["dramatic", "dynamic", "balanced", "soft", "flat"],
  ["full-spectrum", "rich", "standard", "limited", "monochromatic"],
  ["very high", "high", "medium", "low", "very low"],
];

export const SLIDER_MIN = -4;
export const SLIDER_MAX = 4;
export const SLIDER_STEP = 0.5;

/** Map a signed level shift to its term band (1..5). */
export function deltaToBand(delta: number): number {
  if (delta >= 1.5) return 1;
  if (delta >= 0.5) return 2;
  if (delta >= -0.5) return 3;
  if (delta >= -1.5) return 4;
  return 5;
}

/** Fill the sentence template from six band indices (each 1..5). */
export function renderFromBands(bands: readonly number[]): string {
  if (bands.length !== 6 || bands.some((b) => !Number.isInteger(b) || b < 1 || b > 5)) {
    throw new Error(`need six band indices in 1..5, got ${JSON.stringify(bands)}`);
  }
  const t = bands.map((b, i) => TERMS[i][b - 1]);
  return (
    `Set the brightness to ${t[0]}, make the colors ${t[1]}, ` +
    `adjust color variation to be ${t[2]}, set the lighting to be ${t[3]}, ` +
    `use a ${t[4]} color palette, make the contrast ${t[5]}.`
  );
}

/** Render the attribute sentence for a six-component level shift. */
export function renderText(delta: readonly number[]): string {
  if (delta.length !== 6) {
    throw new Error(`need six delta components, got ${delta.length}`);
  }
  return renderFromBands(delta.map(deltaToBand));
}

/** Snap a raw slider value onto the legal grid: [-4, 4] in steps of 0.5. */
export function clampSlider(value: number): number {
  if (!Number.isFinite(value)) return 0;
  const snapped = Math.round(value / SLIDER_STEP) * SLIDER_STEP;
  return Math.min(SLIDER_MAX, Math.max(SLIDER_MIN, snapped));
}
