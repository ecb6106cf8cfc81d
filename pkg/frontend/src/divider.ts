/**
 * Before/after comparison: both images stacked, the top ("after")
 * clipped at a draggable vertical divider. Dragging anywhere on the
 * panel moves the divider; the images themselves are never repainted,
 * so scrubbing is cheap.
 */

export class CompareDivider {
  private readonly root: HTMLElement;
  private readonly afterImg: HTMLImageElement;
  private readonly beforeImg: HTMLImageElement;
  private readonly handle: HTMLElement;
  private fraction = 0.5;
  private dragging = false;

  constructor(container: HTMLElement) {
    this.root = document.createElement("div");
    this.root.className = "compare";
    this.beforeImg = document.createElement("img");
    this.beforeImg.className = "compare__before";
    this.beforeImg.alt = "original image";
    this.afterImg = document.createElement("img");
    this.afterImg.className = "compare__after";
    this.afterImg.alt = "retouched image";
    this.handle = document.createElement("div");
    this.handle.className = "compare__handle";
    this.root.append(this.beforeImg, this.afterImg, this.handle);
    container.appendChild(this.root);

    this.root.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      this.root.setPointerCapture(e.pointerId);
      this.moveTo(e);
    });
    this.root.addEventListener("pointermove", (e) => {
      if (this.dragging) this.moveTo(e);
    });
    this.root.addEventListener("pointerup", () => {
      this.dragging = false;
    });
    this.apply();
  }

  setImages(beforeB64: string | null, afterB64: string | null): void {
    this.beforeImg.src = beforeB64 ? `data:image/png;base64,${beforeB64}` : "";
    this.afterImg.src = afterB64 ? `data:image/png;base64,${afterB64}` : "";
    this.afterImg.style.visibility = afterB64 ? "visible" : "hidden";
    this.handle.style.visibility = afterB64 ? "visible" : "hidden";
  }

  private moveTo(e: PointerEvent): void {
    const rect = this.root.getBoundingClientRect();
    this.fraction = Math.min(1, Math.max(0, (e.clientX - rect.left) / rect.width));
    this.apply();
  }

  private apply(): void {
    const pct = this.fraction * 100;
    // reveal the retouched image left of the divider
    this.afterImg.style.clipPath = `inset(0 ${100 - pct}% 0 0)`;
    this.handle.style.left = `${pct}%`;
  }
}
