/**
 * Wires the panel together: drop zone, mode toggle, six sliders with a
 * live sentence preview, submit, before/after divider, weight-map
 * heatmap tabs, and the history strip.
 */

import { ApiClient, ApiError, ServiceUnreachable } from "./api.js";
import type { RetouchRequest, RetouchResponse } from "./api.js";
import { CompareDivider } from "./divider.js";
import { colorizeInPlace } from "./heatmap.js";
import { SessionState } from "./state.js";
import {
  ATTRIBUTE_LABELS,
  renderText,
  SLIDER_MAX,
  SLIDER_MIN,
  SLIDER_STEP,
  TERMS,
} from "./template.js";

const api = new ApiClient("");
const state = new SessionState();

const $ = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector<T>(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el;
};

const banner = $("#banner");
const dropZone = $("#drop-zone");
const fileInput = $<HTMLInputElement>("#file-input");
const slidersBox = $("#sliders");
const preview = $("#sentence-preview");
const modeManual = $<HTMLInputElement>("#mode-manual");
const modeAuto = $<HTMLInputElement>("#mode-auto");
const submitBtn = $<HTMLButtonElement>("#submit");
const tabsBox = $("#weight-tabs");
const heatmapCanvas = $<HTMLCanvasElement>("#heatmap");
const historyBox = $("#history");
const divider = new CompareDivider($("#compare-slot"));

function showBanner(text: string, kind: "error" | "info"): void {
  banner.textContent = text;
  banner.className = `banner banner--${kind}`;
  banner.hidden = false;
}

function clearBanner(): void {
  banner.hidden = true;
}

// --- sliders --------------------------------------------------------

const sliderInputs: HTMLInputElement[] = [];
const sliderReadouts: HTMLElement[] = [];

ATTRIBUTE_LABELS.forEach((label, i) => {
  const row = document.createElement("label");
  row.className = "slider-row";
  const name = document.createElement("span");
  name.className = "slider-row__name";
  name.textContent = label;
  const input = document.createElement("input");
  input.type = "range";
  input.min = String(SLIDER_MIN);
  input.max = String(SLIDER_MAX);
  input.step = String(SLIDER_STEP);
  input.value = "0";
  const readout = document.createElement("span");
  readout.className = "slider-row__value";
  input.addEventListener("input", () => {
    state.setSlider(i, Number(input.value));
    refreshControls();
  });
  row.append(name, input, readout);
  slidersBox.appendChild(row);
  sliderInputs.push(input);
  sliderReadouts.push(readout);
});

function refreshControls(): void {
  state.sliders.forEach((v, i) => {
    sliderInputs[i].value = String(v);
    sliderReadouts[i].textContent = `${v > 0 ? "+" : ""}${v.toFixed(1)}`;
    sliderInputs[i].disabled = state.mode === "auto";
  });
  preview.textContent =
    state.mode === "manual"
      ? renderText(state.sliders)
      : "(auto: the predictor chooses the target style)";
  submitBtn.disabled = state.image === null || state.inFlight;
}

modeManual.addEventListener("change", () => {
  state.mode = "manual";
  refreshControls();
});
modeAuto.addEventListener("change", () => {
  state.mode = "auto";
  refreshControls();
});

// --- image loading --------------------------------------------------

function loadFile(file: File): void {
  const reader = new FileReader();
  reader.onload = () => {
    const url = reader.result as string;
    state.loadImage(url.slice(url.indexOf(",") + 1));
    divider.setImages(state.image, null);
    renderTabs(null);
    clearBanner();
    refreshControls();
  };
  reader.readAsDataURL(file);
}

dropZone.addEventListener("dragover", (e) => e.preventDefault());
dropZone.addEventListener("drop", (e) => {
  e.preventDefault();
  const file = e.dataTransfer?.files[0];
  if (file) loadFile(file);
});
dropZone.addEventListener("click", () => fileInput.click());
fileInput.addEventListener("change", () => {
  if (fileInput.files?.[0]) loadFile(fileInput.files[0]);
});

// --- weight-map tabs --------------------------------------------------

function renderTabs(maps: string[] | null): void {
  tabsBox.replaceChildren();
  heatmapCanvas.hidden = true;
  if (!maps || maps.length === 0) return;
  maps.forEach((b64, i) => {
    const tab = document.createElement("button");
    tab.className = "tab";
    tab.textContent = `curve ${i + 1}`;
    tab.addEventListener("click", () => {
      for (const other of tabsBox.children) other.classList.remove("tab--active");
      tab.classList.add("tab--active");
      drawHeatmap(b64);
    });
    tabsBox.appendChild(tab);
  });
  (tabsBox.firstChild as HTMLButtonElement).click();
}

function drawHeatmap(grayB64: string): void {
  const img = new Image();
  img.onload = () => {
    heatmapCanvas.width = img.naturalWidth;
    heatmapCanvas.height = img.naturalHeight;
    const ctx = heatmapCanvas.getContext("2d")!;
    ctx.drawImage(img, 0, 0);
    const pixels = ctx.getImageData(0, 0, img.naturalWidth, img.naturalHeight);
    colorizeInPlace(pixels);
    ctx.putImageData(pixels, 0, 0);
    heatmapCanvas.hidden = false;
  };
  img.src = `data:image/png;base64,${grayB64}`;
}

// --- history ----------------------------------------------------------

function renderHistory(): void {
  historyBox.replaceChildren();
  state.history.forEach((entry, i) => {
    const item = document.createElement("button");
    item.className = "history__item";
    const thumb = document.createElement("img");
    thumb.src = `data:image/png;base64,${entry.response.image}`;
    thumb.alt = `history entry ${i + 1}`;
    const caption = document.createElement("span");
    caption.textContent =
      entry.request.mode === "auto" ? "auto" : `Δ ${entry.request.delta!.join(", ")}`;
    item.append(thumb, caption);
    item.title = entry.response.text;
    item.addEventListener("click", () => {
      const request = state.restore(i);
      divider.setImages(state.image, null);
      refreshControls();
      void submit(request); // re-issue the exact stored request
    });
    historyBox.appendChild(item);
  });
}

// --- submission ---------------------------------------------------------

async function submit(request?: RetouchRequest): Promise<void> {
  let req: RetouchRequest;
  try {
    req = request ?? state.buildRequest();
  } catch (err) {
    showBanner(String(err instanceof Error ? err.message : err), "error");
    return;
  }
  const seq = state.beginRequest();
  refreshControls();
  let response: RetouchResponse;
  try {
    response = await api.retouch(req);
  } catch (err) {
    state.abandonRequest(seq);
    refreshControls();
    if (err instanceof ApiError) {
      showBanner(`${err.field}: ${err.message}`, "error");
    } else if (err instanceof ServiceUnreachable) {
      showBanner(err.message, "error");
    } else {
      showBanner(String(err), "error");
    }
    return;
  }
  if (!state.acceptResponse(seq, req, response)) return; // superseded
  clearBanner();
  divider.setImages(req.image, response.image);
  renderTabs(response.weight_maps);
  renderHistory();
  refreshControls();
}

submitBtn.addEventListener("click", () => void submit());

// --- startup ------------------------------------------------------------

async function init(): Promise<void> {
  refreshControls();
  try {
    const config = await api.config();
    const drift =
      JSON.stringify(config.terms) !== JSON.stringify(TERMS.map((r) => [...r]));
    if (drift) {
      showBanner(
        "warning: the service's term table differs from this client build",
        "error",
      );
    }
    if (!config.has_predictor) {
      modeAuto.disabled = true;
      modeAuto.title = "the service was started without a style predictor";
    }
  } catch {
    showBanner("service unreachable — is `retouchkit serve` running?", "error");
  }
}

void init();
