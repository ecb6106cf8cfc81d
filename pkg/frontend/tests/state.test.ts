import { describe, expect, it } from "vitest";

import type { RetouchResponse } from "../src/api.js";
import { SessionState } from "../src/state.js";

function response(overrides: Partial<RetouchResponse> = {}): RetouchResponse {
  return {
    image: "QUZURVI=",
    text: "sentence",
    attributes_in: [3, 3, 3, 3, 3, 3],
    predicted_target: null,
    weight_maps: null,
    ...overrides,
  };
}

function loaded(): SessionState {
  const s = new SessionState();
  s.loadImage("QkVGT1JF");
  return s;
}

describe("sliders", () => {
  it("clamp and snap on write", () => {
    const s = new SessionState();
    s.setSlider(0, 9.9);
    s.setSlider(1, -1.26);
    expect(s.sliders[0]).toBe(4);
    expect(s.sliders[1]).toBe(-1.5);
  });

  it("reject unknown indices", () => {
    expect(() => new SessionState().setSlider(6, 0)).toThrow("no slider");
  });
});

describe("buildRequest", () => {
  it("needs an image", () => {
    expect(() => new SessionState().buildRequest()).toThrow("no image");
  });

  it("carries delta only in manual mode", () => {
    const s = loaded();
    s.setSlider(0, 2);
    expect(s.buildRequest()).toMatchObject({
      mode: "manual",
      delta: [2, 0, 0, 0, 0, 0],
    });
    s.mode = "auto";
    expect(s.buildRequest().delta).toBeUndefined();
  });

  it("snapshots the sliders instead of aliasing them", () => {
    const s = loaded();
    const req = s.buildRequest();
    s.setSlider(0, 4);
    expect(req.delta![0]).toBe(0);
  });
});

describe("submission protocol", () => {
  it("accepts a response for the newest sequence number", () => {
    const s = loaded();
    const seq = s.beginRequest();
    expect(s.inFlight).toBe(true);
    expect(s.acceptResponse(seq, s.buildRequest(), response())).toBe(true);
    expect(s.inFlight).toBe(false);
    expect(s.lastResponse?.image).toBe("QUZURVI=");
    expect(s.history).toHaveLength(1);
  });

  it("discards stale responses by sequence number", () => {
    const s = loaded();
    const first = s.beginRequest();
    const second = s.beginRequest(); // user resubmitted before reply
    expect(s.acceptResponse(first, s.buildRequest(), response())).toBe(false);
    expect(s.history).toHaveLength(0);
    expect(s.lastResponse).toBeNull();
    expect(s.acceptResponse(second, s.buildRequest(), response())).toBe(true);
    expect(s.history).toHaveLength(1);
  });

  it("abandonRequest clears in-flight only for the current attempt", () => {
    const s = loaded();
    const first = s.beginRequest();
    const second = s.beginRequest();
    s.abandonRequest(first); // late failure of a superseded request
    expect(s.inFlight).toBe(true);
    s.abandonRequest(second);
    expect(s.inFlight).toBe(false);
  });

  it("history is append-only across the session", () => {
    const s = loaded();
    for (let i = 0; i < 3; i++) {
      s.setSlider(0, i);
      const seq = s.beginRequest();
      s.acceptResponse(seq, s.buildRequest(), response({ text: `t${i}` }));
    }
    expect(s.history.map((e) => e.response.text)).toEqual(["t0", "t1", "t2"]);
    // a readonly view: pushes via the getter must not compile/typecheck,
    // and restore() must not rewrite entries either
    s.restore(0);
    expect(s.history).toHaveLength(3);
    expect(s.history[0].response.text).toBe("t0");
  });

  it("auto mode seeds the sliders from the predicted target", () => {
    const s = loaded();
    s.mode = "auto";
    const seq = s.beginRequest();
    s.acceptResponse(
      seq,
      s.buildRequest(),
      response({
        attributes_in: [3, 3, 3, 3, 3, 3],
        predicted_target: [4.6, 3, 1, 3, 3, 3],
      }),
    );
    // 4.6 - 3 snaps to the 0.5 grid
    expect(s.sliders).toEqual([1.5, 0, -2, 0, 0, 0]);
  });
});

describe("restore", () => {
  it("copies the stored request into the live controls", () => {
    const s = loaded();
    s.setSlider(5, -1);
    const seq = s.beginRequest();
    const req = s.buildRequest();
    s.acceptResponse(seq, req, response());

    s.setSlider(5, 3);
    s.loadImage("T1RIRVI=");
    const replay = s.restore(0);

    expect(replay).toEqual(req);
    expect(replay).not.toBe(req); // a copy, not the stored object
    expect(s.image).toBe("QkVGT1JF");
    expect(s.sliders[5]).toBe(-1);
  });

  it("rejects unknown entries", () => {
    expect(() => loaded().restore(0)).toThrow("no history entry");
  });
});
