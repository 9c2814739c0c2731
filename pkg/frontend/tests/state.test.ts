// Stale-response sequencing: out-of-order responses never overwrite newer
// ones, and a new segmentation invalidates the previous ROI selection.

import { describe, expect, it } from "vitest";

import type { FeaturesResponse, SegmentResponse } from "../src/api.js";
import { ReviewStore } from "../src/state.js";

function seg(threshold: number, label: number): SegmentResponse {
  return {
    threshold_used: threshold,
    polarity: "complement",
    rois: [
      {
        label,
        area_mm2: 10,
        perimeter_mm: 12,
        width_mm: 4,
        depth_mm: 3,
        max_diameter_mm: 4.5,
        centroid_mm: [1, 2],
        contour: [
          [0, 0],
          [0, 3],
          [3, 3],
          [3, 0],
        ],
      },
    ],
  };
}

describe("ReviewStore sequencing", () => {
  it("drops a stale segment response that arrives after a newer one", () => {
    const store = new ReviewStore();
    store.setFrame("f");
    const tokenOld = store.beginSegment(100);
    const tokenNew = store.beginSegment(120);

    expect(store.applySegment(tokenNew, seg(120, 2))).toBe(true);
    // the slow old response lands afterwards: must be rejected
    expect(store.applySegment(tokenOld, seg(100, 1))).toBe(false);
    expect(store.snapshot().segmentation!.threshold_used).toBe(120);
    expect(store.snapshot().segmentation!.rois[0].label).toBe(2);
  });

  it("applies in-order responses and tracks pending state", () => {
    const store = new ReviewStore();
    store.setFrame("f");
    const t1 = store.beginSegment(null);
    expect(store.snapshot().segmentPending).toBe(true);
    expect(store.applySegment(t1, seg(90, 1))).toBe(true);
    expect(store.snapshot().segmentPending).toBe(false);

    const t2 = store.beginSegment(110);
    const t3 = store.beginSegment(115);
    expect(store.applySegment(t2, seg(110, 1))).toBe(true);
    // t3 still outstanding: overlay stays dimmed
    expect(store.snapshot().segmentPending).toBe(true);
    expect(store.applySegment(t3, seg(115, 1))).toBe(true);
    expect(store.snapshot().segmentPending).toBe(false);
  });

  it("a new segmentation clears the previous selection and features", () => {
    const store = new ReviewStore();
    store.setFrame("f");
    store.applySegment(store.beginSegment(null), seg(90, 1));
    const features = { features: {}, score: 1.5, decision: "malignant", roi: seg(90, 1).rois[0], profile: "combined" } as FeaturesResponse;
    store.applyFeatures(store.beginFeatures(1), features);
    expect(store.snapshot().features).not.toBeNull();

    store.applySegment(store.beginSegment(101), seg(101, 1));
    expect(store.snapshot().selectedLabel).toBeNull();
    expect(store.snapshot().features).toBeNull();
  });

  it("drops stale feature responses", () => {
    const store = new ReviewStore();
    store.setFrame("f");
    store.applySegment(store.beginSegment(null), seg(90, 1));
    const tOld = store.beginFeatures(1);
    const tNew = store.beginFeatures(1);
    const make = (score: number) =>
      ({ features: {}, score, decision: "benign", roi: seg(90, 1).rois[0], profile: "combined" }) as FeaturesResponse;
    expect(store.applyFeatures(tNew, make(2.0))).toBe(true);
    expect(store.applyFeatures(tOld, make(1.0))).toBe(false);
    expect(store.snapshot().features!.score).toBe(2.0);
  });

  it("stale errors are also dropped", () => {
    const store = new ReviewStore();
    store.setFrame("f");
    const tOld = store.beginSegment(100);
    const tNew = store.beginSegment(110);
    expect(store.applySegment(tNew, seg(110, 1))).toBe(true);
    expect(store.fail(tOld, "segment", "boom")).toBe(false);
    expect(store.snapshot().error).toBeNull();
  });
});
