import { readFileSync } from "node:fs";
import { join } from "node:path";
import { z } from "zod";

/** Run-directory manifest written by the solver harness. */
export const ManifestSchema = z.object({
  schema_version: z.literal(1),
  case: z.string(),
  scheme: z.string(),
  config: z.record(z.unknown()),
  t_end: z.number(),
  files: z.object({
    history: z.string(),
    fields_initial: z.string().nullable().optional(),
    fields_final: z.string().nullable().optional(),
  }),
  errors: z.record(z.number()).optional(),
  audits: z.record(z.record(z.unknown())).optional(),
});

export type Manifest = z.infer<typeof ManifestSchema>;

export function loadManifest(runDir: string): Manifest {
  const path = join(runDir, "manifest.json");
  let raw: string;
  try {
    raw = readFileSync(path, "utf8");
  } catch {
    throw new Error(`missing manifest: ${path}`);
  }
  const parsed = ManifestSchema.safeParse(JSON.parse(raw));
  if (!parsed.success) {
    throw new Error(
      `invalid manifest ${path}: ${parsed.error.issues
        .map((i) => `${i.path.join(".")}: ${i.message}`)
        .join("; ")}`,
    );
  }
  return parsed.data;
}
