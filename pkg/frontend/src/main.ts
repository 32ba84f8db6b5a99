/** Page bootstrap: loads the service base URL from config.json, wires the
 * occupancy view, campaign browser, journey editor, and claim panel. */

import { ApiClient, fetchTransport } from "./api.js";
import { ClaimPanel } from "./claims.js";
import { EditSession } from "./edits.js";
import { OccupancyView } from "./occupancy.js";
import { CanvasMap, renderLegend } from "./render.js";
import { ViewState, THRESHOLD_MAX_DBM, THRESHOLD_MIN_DBM } from "./state.js";

interface Bootstrap {
  baseUrl: string;
  token?: string;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const config = (await (await fetch("./config.json")).json()) as Bootstrap;
  const api = new ApiClient(fetchTransport(config.baseUrl, config.token));
  const state = new ViewState();

  const canvas = el<HTMLCanvasElement>("map");
  const map = new CanvasMap(canvas);
  const status = el<HTMLElement>("status");
  const legend = el<HTMLElement>("legend");

  const view = new OccupancyView(api, state, {
    onLayer: (layer) => {
      map.drawLayer(state.viewport, layer, state.polygonVertices);
      renderLegend(legend, layer);
      status.textContent = `${layer.cells.length} cells @ threshold ${layer.thresholdDbm} dBm`;
    },
    onError: (message) => {
      status.textContent = `error: ${message} (showing previous layer)`;
    },
    onNotice: (message) => {
      status.textContent = message;
    },
  });

  const slider = el<HTMLInputElement>("threshold");
  slider.min = String(THRESHOLD_MIN_DBM);
  slider.max = String(THRESHOLD_MAX_DBM);
  slider.value = String(state.thresholdDbm);
  const sliderLabel = el<HTMLElement>("threshold-label");
  sliderLabel.textContent = `${state.thresholdDbm} dBm`;
  slider.addEventListener("input", () => {
    const v = view.onThresholdInput(Number(slider.value));
    sliderLabel.textContent = `${v} dBm`;
  });

  const campaignSelect = el<HTMLSelectElement>("campaign");
  const journeySelect = el<HTMLSelectElement>("journey");
  const campaigns = await api.listCampaigns();
  for (const c of campaigns) {
    const option = document.createElement("option");
    option.value = c.campaign_id;
    option.textContent = c.name;
    campaignSelect.append(option);
  }
  let session: EditSession | null = null;

  async function selectCampaign(id: string): Promise<void> {
    state.selectedCampaign = id;
    journeySelect.replaceChildren();
    for (const j of await api.listJourneys(id)) {
      const option = document.createElement("option");
      option.value = j.journey_id;
      option.textContent = `${j.device_serial}${j.derived ? " (edited)" : ""}`;
      journeySelect.append(option);
    }
    await view.refresh();
  }

  campaignSelect.addEventListener("change", () => void selectCampaign(campaignSelect.value));
  journeySelect.addEventListener("change", () => {
    session = new EditSession(api, journeySelect.value);
    void session.load().then((records) => {
      status.textContent = `journey loaded: ${records.length} records`;
    });
  });

  el<HTMLButtonElement>("draw-close").addEventListener("click", () => {
    if (!state.closePolygon()) status.textContent = "polygon needs at least 3 vertices";
    void view.refresh();
  });
  el<HTMLButtonElement>("draw-clear").addEventListener("click", () => {
    state.clearPolygon();
  });
  canvas.addEventListener("click", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const [lat, lon] = map.pixelToLatLon(
      state.viewport,
      ev.clientX - rect.left,
      ev.clientY - rect.top,
    );
    state.addPolygonVertex(lat, lon);
  });

  const clipButton = el<HTMLButtonElement>("edit-clip");
  clipButton.addEventListener("click", () => {
    const ring = state.closedPolygon();
    if (!session) return;
    if (!ring) {
      status.textContent = "close the polygon before filtering";
      return;
    }
    void session.apply({ op: "ClipPolygon", ring }).then((records) => {
      status.textContent = `preview: ${records.length} records`;
    });
  });
  el<HTMLButtonElement>("edit-resample").addEventListener("click", () => {
    const step = Number(el<HTMLInputElement>("resample-step").value);
    if (!session || !(step > 0)) return;
    void session.apply({ op: "ResampleDistance", step_m: step }).then((records) => {
      status.textContent = `preview: ${records.length} records`;
    });
  });
  el<HTMLButtonElement>("edit-undo").addEventListener("click", () => {
    if (!session) return;
    status.textContent = `preview: ${session.undo().length} records`;
  });
  el<HTMLButtonElement>("edit-commit").addEventListener("click", () => {
    if (!session) return;
    void session.commit().then((result) => {
      status.textContent = result
        ? `committed ${result.operations.length} edits → ${result.journey_id}`
        : "nothing to commit";
      if (state.selectedCampaign) void selectCampaign(state.selectedCampaign);
    });
  });

  const claimList = el<HTMLElement>("claims");
  const panel = new ClaimPanel(api, {
    authenticated: Boolean(config.token),
    onUpdate: (views) => {
      claimList.replaceChildren(
        ...views.map((v) => {
          const li = document.createElement("li");
          li.textContent = `${v.claim.claim_id.slice(0, 8)} ${v.claim.low_hz / 1e6}–${v.claim.high_hz / 1e6} MHz: ${v.displayedState}`;
          li.className = `claim-${v.displayedState.toLowerCase()}`;
          return li;
        }),
      );
    },
    onError: (message) => {
      status.textContent = `claims: ${message}`;
    },
  });
  panel.start();

  el<HTMLButtonElement>("claim-submit").addEventListener("click", () => {
    const ring = state.closedPolygon();
    if (!ring) {
      status.textContent = "draw and close a region for the claim";
      return;
    }
    const request = {
      low_hz: Number(el<HTMLInputElement>("claim-low").value) * 1e6,
      high_hz: Number(el<HTMLInputElement>("claim-high").value) * 1e6,
      t0_ms: Date.now(),
      t1_ms: Date.now() + 86_400_000,
      region: ring,
    };
    void panel
      .probeConflicts(request)
      .then((conflicts) => {
        status.textContent = conflicts.length
          ? `warning: ${conflicts.length} conflicting claim(s)`
          : "no conflicts";
        return panel.submit(request);
      })
      .catch((err) => {
        status.textContent = err instanceof Error ? err.message : String(err);
      });
  });

  if (campaigns.length > 0) {
    campaignSelect.value = campaigns[0].campaign_id;
    await selectCampaign(campaigns[0].campaign_id);
  } else {
    await view.refresh();
  }
}

void boot();
