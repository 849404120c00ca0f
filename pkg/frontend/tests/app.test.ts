// Secondary acceptance: dragging the m slider triggers exactly one debounced
// request, and the config hash displayed with the panels matches the
// response for that request.

// @vitest-environment jsdom
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, type FetchLike } from "../src/api";
import { DEBOUNCE_MS } from "../src/controller";
import { buildApp } from "../src/main";
import type { RunRequest } from "../src/types";
import spectraFixture from "./fixtures/spectra_payload.json";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

const DATASETS = {
  datasets: [
    {
      name: "gaussian-wn-demo",
      kind: "model",
      n: 1859,
      columns: ["Y1", "Y2"],
      transform: "raw",
    },
  ],
};

function makeFetch(log: { posts: RunRequest[] }): FetchLike {
  return async (url, init) => {
    if (String(url).includes("/api/datasets")) {
      return jsonResponse(200, DATASETS);
    }
    if (init?.method === "POST") {
      const req = JSON.parse(String(init.body)) as RunRequest;
      log.posts.push(req);
      const payload = {
        ...(spectraFixture as Record<string, unknown>),
        config_hash: `hash-of-m${req.m}`,
        cached: false,
      };
      return jsonResponse(200, payload);
    }
    throw new Error(`unexpected request ${url}`);
  };
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("slider-driven request discipline", () => {
  it("one m sweep = one request; displayed hash matches the response", async () => {
    const log = { posts: [] as RunRequest[] };
    const root = document.createElement("div");
    document.body.appendChild(root);
    buildApp(root, new ApiClient("", makeFetch(log)));

    // initial load: datasets then the first spectra request
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS + 10);
    expect(log.posts).toHaveLength(1);
    expect(root.querySelector(".config-hash")!.textContent).toBe(
      `hash-of-m${log.posts[0].m}`
    );

    // drag the truncation slider across several values
    const slider = root.querySelector(".m-slider") as HTMLInputElement;
    for (const value of ["12", "13", "14", "15"]) {
      slider.value = value;
      slider.dispatchEvent(new Event("input"));
    }
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS + 10);

    expect(log.posts).toHaveLength(2); // exactly one more request
    expect(log.posts[1].m).toBe(15);
    expect(root.querySelector(".config-hash")!.textContent).toBe("hash-of-m15");

    // rendered panel values still follow the payload verbatim
    const svgs = root.querySelectorAll("svg.panel");
    expect(svgs).toHaveLength(4);
    root.remove();
  });

  it("a b-slider drag issues a single request with both components equal", async () => {
    const log = { posts: [] as RunRequest[] };
    const root = document.createElement("div");
    document.body.appendChild(root);
    buildApp(root, new ApiClient("", makeFetch(log)));
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS + 10);

    const slider = root.querySelector(".b-slider") as HTMLInputElement;
    for (const value of ["0.65", "0.7", "0.75"]) {
      slider.value = value;
      slider.dispatchEvent(new Event("input"));
    }
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS + 10);

    expect(log.posts).toHaveLength(2);
    expect(log.posts[1].b).toEqual([0.75, 0.75]);
    root.remove();
  });
});
