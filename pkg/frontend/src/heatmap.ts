/**
 * Weight maps arrive as 8-bit grayscale PNGs (value = weight x 255).
 * For display they are recolored with a blue->cyan->yellow->red ramp,
 * the usual "cold = this curve contributes nothing here, hot = this
 * curve owns the pixel" reading.
 */

/** Piecewise-linear color ramp over [0, 1]; returns [r, g, b] bytes. */
export function rampColor(value: number): [number, number, number] {
  const v = Math.min(1, Math.max(0, value));
  const stops: [number, [number, number, number]][] = [
    [0.0, [24, 32, 120]], // deep blue
    [0.33, [28, 180, 190]], // cyan
    [0.66, [250, 210, 60]], // yellow
    [1.0, [210, 32, 32]], // red
  ];
  for (let i = 1; i < stops.length; i++) {
    const [t1, c1] = stops[i];
    if (v <= t1) {
      const [t0, c0] = stops[i - 1];
      const f = (v - t0) / (t1 - t0);
      return [
        Math.round(c0[0] + f * (c1[0] - c0[0])),
        Math.round(c0[1] + f * (c1[1] - c0[1])),
        Math.round(c0[2] + f * (c1[2] - c0[2])),
      ];
    }
  }
  return stops[stops.length - 1][1];
}

/** Minimal structural slice of ImageData, so tests need no DOM. */
export interface RgbaBuffer {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8ClampedArray;
}

/**
 * Recolor decoded grayscale pixels (RGBA, R=G=B=weight byte) into the
 * heatmap ramp, in place, leaving alpha untouched.
 */
export function colorizeInPlace(buf: RgbaBuffer): void {
  const px = buf.data;
  for (let i = 0; i < px.length; i += 4) {
    const [r, g, b] = rampColor(px[i] / 255);
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }
}
