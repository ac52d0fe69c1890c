// Typed client for the session wire protocol. The client never parses
// local files; bytes are base64-wrapped and everything else is JSON.

import type {
  AnalysisMsg,
  CellMsg,
  InfillResponse,
  LevelsMsg,
  Role,
  ServiceErrorBody,
  SummaryMsg,
} from "./types.js";

export class ServiceError extends Error {
  code: string;
  detail: string;

  constructor(body: ServiceErrorBody) {
    super(body.message);
    this.code = body.code;
    this.detail = body.detail;
  }
}

export function bytesToBase64(bytes: Uint8Array): string {
  let binary = "";
  const step = 0x8000;
  for (let i = 0; i < bytes.length; i += step) {
    binary += String.fromCharCode(...bytes.subarray(i, i + step));
  }
  return btoa(binary);
}

export function base64ToBytes(data: string): Uint8Array {
  const binary = atob(data);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  return bytes;
}

export interface InfillParams {
  region: CellMsg[];
  trackLevels: Record<number, LevelsMsg>;
  tensionLevels: Record<number, number>;
  seed: number;
  generator?: "baseline" | "remote";
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ServiceError(
        payload.error ?? { code: "PROTOCOL", detail: "", message: "bad response" },
      );
    }
    return payload as T;
  }

  async health(): Promise<boolean> {
    try {
      const response = await this.fetchImpl(`${this.baseUrl}/health`);
      return response.ok;
    } catch {
      return false;
    }
  }

  createSession(midi: Uint8Array) {
    return this.post<{ session_id: string; summary: SummaryMsg }>(
      "/create-session",
      { midi_b64: bytesToBase64(midi) },
    );
  }

  setRoles(sessionId: string, roles: Role[]) {
    return this.post<{ ok: boolean }>("/set-roles", {
      session_id: sessionId,
      roles,
    });
  }

  analyze(sessionId: string, originBar: number) {
    return this.post<AnalysisMsg>("/analyze", {
      session_id: sessionId,
      origin_bar: originBar,
    });
  }

  infill(sessionId: string, params: InfillParams) {
    return this.post<InfillResponse>("/infill", {
      session_id: sessionId,
      region: params.region,
      track_levels: params.trackLevels,
      tension_levels: params.tensionLevels,
      seed: params.seed,
      generator: params.generator ?? "baseline",
    });
  }

  resolve(sessionId: string, keep: boolean) {
    return this.post<{ ok: boolean }>("/resolve", {
      session_id: sessionId,
      keep,
    });
  }

  async exportMidi(sessionId: string): Promise<Uint8Array> {
    const body = await this.post<{ midi_b64: string }>("/export", {
      session_id: sessionId,
    });
    return base64ToBytes(body.midi_b64);
  }
}
