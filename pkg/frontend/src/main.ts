// Wiring: parameter panel -> debounced requests -> panels + complex view.

import { ApiClient } from "./api";
import { renderComplexView } from "./complex";
import { SpectraController } from "./controller";
import { renderPanels } from "./panels";
import { ExplorerState, POINT_GRID } from "./state";
import type { SpectraPayload } from "./types";

const API_BASE = (window as { LGSPECTRA_API?: string }).LGSPECTRA_API ?? "";

function option(value: string, label?: string): HTMLOptionElement {
  const node = document.createElement("option");
  node.value = value;
  node.textContent = label ?? value;
  return node;
}

function labelled(text: string, control: HTMLElement): HTMLLabelElement {
  const wrap = document.createElement("label");
  wrap.className = "control";
  const span = document.createElement("span");
  span.textContent = text;
  wrap.appendChild(span);
  wrap.appendChild(control);
  return wrap;
}

export function buildApp(root: HTMLElement, api: ApiClient): {
  state: ExplorerState;
  controller: SpectraController;
} {
  const state = new ExplorerState();
  const controller = new SpectraController(api);

  const controls = document.createElement("div");
  controls.className = "controls";
  const panels = document.createElement("div");
  panels.className = "panels";
  const complexPane = document.createElement("div");
  complexPane.className = "complex-pane";
  const status = document.createElement("div");
  status.className = "status";
  root.append(controls, status, panels, complexPane);

  const datasetSelect = document.createElement("select");
  datasetSelect.className = "dataset-select";
  datasetSelect.addEventListener("change", () => state.set("dataset", datasetSelect.value));
  controls.appendChild(labelled("dataset", datasetSelect));

  const pairInput = document.createElement("input");
  pairInput.value = "0,1";
  pairInput.className = "pair-input";
  pairInput.addEventListener("change", () => {
    const parts = pairInput.value.split(",").map((s) => s.trim());
    state.set(
      "pair",
      parts.map((s) => (/^\d+$/.test(s) ? Number(s) : s))
    );
  });
  controls.appendChild(labelled("pair", pairInput));

  const pointSelect = document.createElement("select");
  pointSelect.className = "point-select";
  for (const spec of POINT_GRID) pointSelect.appendChild(option(spec));
  pointSelect.value = state.params.point;
  pointSelect.addEventListener("change", () => state.set("point", pointSelect.value));
  controls.appendChild(labelled("point", pointSelect));

  const freePoint = document.createElement("input");
  freePoint.placeholder = "e.g. 25::75";
  freePoint.className = "free-point";
  freePoint.addEventListener("change", () => {
    if (/^\d+(\.\d+)?::\d+(\.\d+)?$/.test(freePoint.value)) {
      state.set("point", freePoint.value);
    }
  });
  controls.appendChild(labelled("free point", freePoint));

  const bSlider = document.createElement("input");
  bSlider.type = "range";
  bSlider.min = "0.3";
  bSlider.max = "1.2";
  bSlider.step = "0.05";
  bSlider.value = String(state.params.b);
  bSlider.className = "b-slider";
  bSlider.addEventListener("input", () => state.set("b", Number(bSlider.value)));
  controls.appendChild(labelled("bandwidth b", bSlider));

  const mSlider = document.createElement("input");
  mSlider.type = "range";
  mSlider.min = "1";
  mSlider.max = "40";
  mSlider.step = "1";
  mSlider.value = String(state.params.m);
  mSlider.className = "m-slider";
  mSlider.addEventListener("input", () => state.set("m", Number(mSlider.value)));
  controls.appendChild(labelled("truncation m", mSlider));

  const windowSelect = document.createElement("select");
  for (const name of ["tukey-hanning", "bartlett", "uniform"]) {
    windowSelect.appendChild(option(name));
  }
  windowSelect.className = "window-select";
  windowSelect.addEventListener("change", () => state.set("window", windowSelect.value));
  controls.appendChild(labelled("lag window", windowSelect));

  const rInput = document.createElement("input");
  rInput.type = "number";
  rInput.min = "2";
  rInput.value = String(state.params.R);
  rInput.className = "r-input";
  rInput.addEventListener("change", () => state.set("R", Number(rInput.value)));
  controls.appendChild(labelled("replicates R", rInput));

  const progress = document.createElement("progress");
  progress.className = "job-progress";
  progress.max = 1;
  progress.hidden = true;
  controls.appendChild(progress);

  const showPayload = (payload: SpectraPayload) => {
    progress.hidden = true;
    status.textContent = payload.cached ? "served from cache" : "computed";
    renderPanels(panels, payload, state.pinnedFrequencies, (omega) => {
      state.togglePin(omega);
      renderPanelsAgain(payload);
      void api
        .complexAt(payload.config_hash, omega)
        .then((cloud) => renderComplexView(complexPane, cloud))
        .catch(() => {
          complexPane.textContent = "no replicate values for this configuration";
        });
    });
  };
  const renderPanelsAgain = (payload: SpectraPayload) => {
    renderPanels(panels, payload, state.pinnedFrequencies, (omega) => {
      state.togglePin(omega);
      renderPanelsAgain(payload);
    });
  };

  controller.onPayload = showPayload;
  controller.onError = (err) => {
    progress.hidden = true;
    status.textContent = `request failed: ${String(err)}`;
  };

  state.onChange(() => {
    progress.hidden = false;
    progress.removeAttribute("value");
    controller.schedule(state.toRequest());
  });

  void api.listDatasets().then((datasets) => {
    state.setDatasets(datasets);
    datasetSelect.textContent = "";
    for (const d of datasets) {
      datasetSelect.appendChild(option(d.name, `${d.name} (${d.kind}, n=${d.n})`));
    }
    datasetSelect.value = state.params.dataset;
    controller.schedule(state.toRequest());
  });

  return { state, controller };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  buildApp(document.getElementById("app") as HTMLElement, new ApiClient(API_BASE));
}
