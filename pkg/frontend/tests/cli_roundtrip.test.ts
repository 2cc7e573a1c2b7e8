// Integration against the real backend: the params JSON this UI emits must
// be accepted by the service, and replaying it through the CLI on the same
// frame must reproduce the service's exported mask byte for byte.
//
// Skipped when the mudseg Python package is not importable.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { DEFAULT_PARAMS, cloneParams, serializeParams, validate } from "../src/params.js";
import type { PipelineParams } from "../src/types.js";

const PYTHON = "python3";
const hasBackend =
  spawnSync(PYTHON, ["-c", "import mudseg"], { timeout: 20000 }).status === 0;

const PORT = 8100 + (process.pid % 700);
const BASE = `http://127.0.0.1:${PORT}`;

function makePgm(w: number, h: number): Uint8Array {
  // Deterministic scene: textured mid-gray, a bright grain, scattered pores.
  const header = new TextEncoder().encode(`P5\n${w} ${h}\n255\n`);
  const body = new Uint8Array(w * h);
  let lcg = 12345;
  const rand = () => ((lcg = (lcg * 1103515245 + 12345) & 0x7fffffff) / 0x7fffffff);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      let v = 128 + 6 * Math.sin(x / 17) + 6 * Math.cos(y / 23) + (rand() - 0.5) * 12;
      if ((x - 60) ** 2 + (y - 70) ** 2 <= 28 ** 2) v = 205; // grain
      if ((x - 140) ** 2 + (y - 50) ** 2 <= 12 ** 2) v = 40; // pore
      if ((x - 150) ** 2 + (y - 120) ** 2 <= 7 ** 2) v = 35; // pore
      body[y * w + x] = Math.max(0, Math.min(255, Math.round(v)));
    }
  }
  const out = new Uint8Array(header.length + body.length);
  out.set(header);
  out.set(body, header.length);
  return out;
}

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const r = await fetch(`${BASE}/sessions/probe`);
      if (r.status === 404) return; // up and routing
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("tuning service did not come up");
}

describe.skipIf(!hasBackend)("CLI round trip through the live service", () => {
  let server: ChildProcess;
  let workDir: string;

  beforeAll(async () => {
    workDir = mkdtempSync(join(tmpdir(), "mudseg-ui-"));
    server = spawn(PYTHON, ["-m", "mudseg.cli", "serve", "--addr", `127.0.0.1:${PORT}`], {
      stdio: "ignore",
    });
    await waitForServer();
  }, 45000);

  afterAll(() => {
    server?.kill();
  });

  it(
    "UI-emitted params replayed via CLI reproduce the exported mask",
    { timeout: 60000 },
    async () => {
      // tune something away from the defaults, as an analyst would
      const params: PipelineParams = cloneParams(DEFAULT_PARAMS);
      params.scales = [{ median_radius_px: 1, se_radius_px: 2, threshold: 84 }];
      params.erosion_count = 2;
      params.erosion_se_radius_px = 1;
      expect(validate(params)).toEqual([]);
      const uiJson = serializeParams(params);

      // session + params over the real HTTP API
      const pgm = makePgm(192, 160);
      const form = new FormData();
      form.append("image", new Blob([pgm.buffer as ArrayBuffer]), "frame.pgm");
      form.append(
        "meta",
        JSON.stringify({ source_id: "roundtrip", magnification: 15000, hfw_um: 20.0 }),
      );
      const created = await fetch(`${BASE}/sessions`, { method: "POST", body: form });
      expect(created.status).toBe(201);
      const sid = ((await created.json()) as { session_id: string }).session_id;

      const updated = await fetch(`${BASE}/sessions/${sid}/params`, {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: uiJson,
      });
      expect(updated.status).toBe(200);

      // export and unzip (python stdlib does the extraction)
      const exported = await fetch(`${BASE}/sessions/${sid}/export`);
      expect(exported.status).toBe(200);
      const zipPath = join(workDir, "export.zip");
      writeFileSync(zipPath, Buffer.from(await exported.arrayBuffer()));
      const unzip = spawnSync(PYTHON, ["-m", "zipfile", "-e", zipPath, join(workDir, "export")]);
      expect(unzip.status).toBe(0);

      // the exported manifest is semantically the params the UI sent
      const exportedParams = JSON.parse(
        readFileSync(join(workDir, "export", "params.json"), "utf-8"),
      );
      expect(exportedParams).toEqual(JSON.parse(uiJson));

      // replay through the CLI on the same frame
      writeFileSync(join(workDir, "frame.pgm"), pgm);
      writeFileSync(
        join(workDir, "frame.meta.json"),
        JSON.stringify({ source_id: "roundtrip", magnification: 15000, hfw_um: 20.0 }),
      );
      writeFileSync(join(workDir, "ui_params.json"), uiJson);
      const replay = spawnSync(PYTHON, [
        "-m",
        "mudseg.cli",
        "segment",
        workDir,
        "--params",
        join(workDir, "ui_params.json"),
        "--out",
        join(workDir, "replay"),
      ]);
      expect(replay.status, String(replay.stderr)).toBe(0);

      const cliMask = readFileSync(join(workDir, "replay", "frame.mask.png"));
      const exportedMask = readFileSync(join(workDir, "export", "mask.png"));
      expect(cliMask.equals(exportedMask)).toBe(true);
    },
  );
});
