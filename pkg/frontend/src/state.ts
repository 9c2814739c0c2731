// Review-session state. Requests carry monotonically increasing sequence
// tokens; a response is applied only while its token is newer than the last
// applied one, so out-of-order (stale) responses never overwrite fresher
// results. At most one /segment request per frame is considered current.

import type { FeaturesResponse, SegmentResponse } from "./api.js";

export interface ReviewState {
  frameId: string | null;
  threshold: number | null; // null = automatic (Otsu)
  segmentation: SegmentResponse | null;
  selectedLabel: number | null;
  features: FeaturesResponse | null;
  segmentPending: boolean;
  error: string | null;
}

export type Listener = (state: ReviewState) => void;

export class ReviewStore {
  private state: ReviewState = {
    frameId: null,
    threshold: null,
    segmentation: null,
    selectedLabel: null,
    features: null,
    segmentPending: false,
    error: null,
  };

  private listeners: Listener[] = [];
  private segmentSeq = 0;
  private segmentApplied = 0;
  private featureSeq = 0;
  private featureApplied = 0;

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.snapshot());
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  snapshot(): ReviewState {
    return { ...this.state };
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const listener of this.listeners) listener(snap);
  }

  setFrame(frameId: string): void {
    this.state = {
      frameId,
      threshold: null,
      segmentation: null,
      selectedLabel: null,
      features: null,
      segmentPending: false,
      error: null,
    };
    this.segmentSeq = this.segmentApplied = 0;
    this.featureSeq = this.featureApplied = 0;
    this.emit();
  }

  /** Register an outgoing /segment request; returns its sequence token. */
  beginSegment(threshold: number | null): number {
    this.state.threshold = threshold;
    this.state.segmentPending = true;
    this.emit();
    return ++this.segmentSeq;
  }

  /** Apply a /segment response; returns false when the token is stale. */
  applySegment(token: number, response: SegmentResponse): boolean {
    if (token <= this.segmentApplied) return false;
    this.segmentApplied = token;
    this.state.segmentation = response;
    this.state.segmentPending = token < this.segmentSeq;
    this.state.error = null;
    // a new segmentation invalidates the previous ROI selection
    this.state.selectedLabel = null;
    this.state.features = null;
    this.emit();
    return true;
  }

  beginFeatures(label: number): number {
    this.state.selectedLabel = label;
    this.emit();
    return ++this.featureSeq;
  }

  applyFeatures(token: number, response: FeaturesResponse): boolean {
    if (token <= this.featureApplied) return false;
    this.featureApplied = token;
    this.state.features = response;
    this.state.error = null;
    this.emit();
    return true;
  }

  fail(token: number, kind: "segment" | "features", message: string): boolean {
    if (kind === "segment") {
      if (token <= this.segmentApplied) return false;
      this.segmentApplied = token;
      this.state.segmentPending = token < this.segmentSeq;
    } else {
      if (token <= this.featureApplied) return false;
      this.featureApplied = token;
    }
    this.state.error = message;
    this.emit();
    return true;
  }

  clearError(): void {
    this.state.error = null;
    this.emit();
  }
}
