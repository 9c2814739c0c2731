// Typed client for the sonoseg review service. The UI never computes domain
// math: every number it shows comes back from these endpoints verbatim.

export interface RoiPayload {
  label: number;
  area_mm2: number;
  perimeter_mm: number;
  width_mm: number;
  depth_mm: number;
  max_diameter_mm: number;
  centroid_mm: [number, number];
  contour?: [number, number][]; // (row, col) pixel polygon
}

export interface SegmentResponse {
  threshold_used: number;
  polarity: string;
  rois: RoiPayload[];
}

export interface FeaturesResponse {
  features: Record<string, number | number[][] | Record<string, string> | null>;
  score: number | null;
  decision: string | null;
  roi: RoiPayload;
  profile: string;
}

export interface UploadResponse {
  frame_id: string;
  source_frame_id: string;
  num_samples: number;
  num_lines: number;
  axial_spacing_mm: number;
  lateral_spacing_mm: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep statusText
    }
    throw new ApiError(detail, response.status);
  }
  return (await response.json()) as T;
}

export class ReviewApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async uploadFrame(container: Blob | ArrayBuffer): Promise<UploadResponse> {
    const body = container instanceof Blob ? container : new Blob([container]);
    const response = await this.fetchFn(`${this.baseUrl}/frames`, {
      method: "POST",
      body,
      headers: { "content-type": "application/zip" },
    });
    return asJson<UploadResponse>(response);
  }

  async segment(frameId: string, threshold: number | null): Promise<SegmentResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/frames/${frameId}/segment`, {
      method: "POST",
      body: JSON.stringify({ threshold }),
      headers: { "content-type": "application/json" },
    });
    return asJson<SegmentResponse>(response);
  }

  async roiFeatures(
    frameId: string,
    label: number,
    profile: string,
    threshold: number | null,
  ): Promise<FeaturesResponse> {
    const response = await this.fetchFn(
      `${this.baseUrl}/frames/${frameId}/rois/${label}/features`,
      {
        method: "POST",
        body: JSON.stringify({ profile, threshold }),
        headers: { "content-type": "application/json" },
      },
    );
    return asJson<FeaturesResponse>(response);
  }

  async profiles(): Promise<{ profiles: Record<string, unknown> }> {
    const response = await this.fetchFn(`${this.baseUrl}/profiles`);
    return asJson(response);
  }

  bmodeUrl(frameId: string): string {
    return `${this.baseUrl}/frames/${frameId}/bmode.png`;
  }

  residueUrl(frameId: string): string {
    return `${this.baseUrl}/frames/${frameId}/residue.png`;
  }
}
