// HTTP client for the session service.

import type { CommandJson, MutationReport, Vec3 } from "./commands.js";

export interface Transport {
  createSession(): Promise<{ id: string; generation: number }>;
  postCommand(id: string, cmd: CommandJson): Promise<MutationReport>;
  /** Full payload bytes, or null when `since` still matches (HTTP 304). */
  getMesh(id: string, since?: number): Promise<ArrayBuffer | null>;
  pick(id: string, origin: Vec3, dir: Vec3): Promise<Vec3 | null>;
  getLog(id: string): Promise<string>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class HttpTransport implements Transport {
  constructor(private base: string = "") {}

  private async ok(res: Response): Promise<Response> {
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (body && body.detail) detail = String(body.detail);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(res.status, detail);
    }
    return res;
  }

  async createSession() {
    const res = await this.ok(await fetch(`${this.base}/sessions`, { method: "POST" }));
    return res.json();
  }

  async postCommand(id: string, cmd: CommandJson): Promise<MutationReport> {
    const res = await this.ok(await fetch(`${this.base}/sessions/${id}/commands`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(cmd),
    }));
    return res.json();
  }

  async getMesh(id: string, since?: number): Promise<ArrayBuffer | null> {
    const q = since === undefined ? "" : `?since=${since}`;
    const res = await fetch(`${this.base}/sessions/${id}/mesh${q}`);
    if (res.status === 304) return null;
    await this.ok(res);
    return res.arrayBuffer();
  }

  async pick(id: string, origin: Vec3, dir: Vec3): Promise<Vec3 | null> {
    const res = await this.ok(await fetch(`${this.base}/sessions/${id}/pick`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ origin, dir }),
    }));
    const body = await res.json();
    return body.hit ? (body.point as Vec3) : null;
  }

  async getLog(id: string): Promise<string> {
    const res = await this.ok(await fetch(`${this.base}/sessions/${id}/log`));
    return res.text();
  }
}
