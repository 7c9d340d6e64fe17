/**
 * HTTP client for the pkgguard service.
 *
 * The service owns the compiled automata; this client opens per-stream guard
 * handles and exchanges logits with them. All numeric payloads travel as
 * plain JSON numbers, which round-trip float32 values exactly.
 */

export interface OpenGuardOptions {
  checkpointPath?: string;
  listPath?: string;
  vocabPath: string;
  profile?: string;
  policy?: 'force_newline' | 'abort';
  bareCommands?: boolean;
}

export interface RegionEvent {
  type: string;
  name?: string | null;
  accepted?: boolean | null;
  info?: string | null;
  start?: number | null;
}

export interface ProcessResult {
  /** Masked logits, same length as the input. */
  logits: number[];
  permittedCount: number;
  inZone: boolean;
  events: RegionEvent[];
  done: boolean;
}

export interface ReplayStep {
  tokenId: number;
  logits: number[];
  maskedLogits: number[];
}

export interface ReplayResult {
  steps: ReplayStep[];
  text: string;
  events: RegionEvent[];
}

export interface SyntheticFixture {
  listPath: string;
  checkpointPath: string;
  vocabPath: string;
  listDigest: string;
}

export class PkgguardError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = 'PkgguardError';
  }
}

async function request<T>(
  baseUrl: string,
  method: string,
  path: string,
  body?: unknown,
): Promise<T> {
  const response = await fetch(baseUrl + path, {
    method,
    headers: { 'content-type': 'application/json' },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const parsed = (await response.json()) as { detail?: string };
      if (parsed.detail) detail = parsed.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new PkgguardError(detail, response.status);
  }
  return (await response.json()) as T;
}

/** One decoding stream under the guard. Not safe for concurrent callers. */
export class GuardHandle {
  private closed = false;

  constructor(
    private readonly baseUrl: string,
    readonly handleId: string,
    readonly vocabSize: number,
  ) {}

  private assertOpen(): void {
    if (this.closed) {
      throw new PkgguardError('guard handle already closed', 409);
    }
  }

  /**
   * Report tokens sampled since the last call, then mask the next step's
   * logits. This is the per-step hook for a generation loop.
   */
  async processLogits(delta: number[], logits: number[] | Float32Array): Promise<ProcessResult> {
    this.assertOpen();
    const raw = await request<{
      logits: number[];
      permitted_count: number;
      in_zone: boolean;
      events: RegionEvent[];
      done: boolean;
    }>(this.baseUrl, 'POST', `/guard/${this.handleId}/process`, {
      delta,
      logits: Array.from(logits),
    });
    return {
      logits: raw.logits,
      permittedCount: raw.permitted_count,
      inZone: raw.in_zone,
      events: raw.events,
      done: raw.done,
    };
  }

  /** Permitted token ids for the next step, without supplying logits. */
  async mask(): Promise<{ permitted: number[]; inZone: boolean; generationStep: number }> {
    this.assertOpen();
    const raw = await request<{
      permitted: number[];
      in_zone: boolean;
      generation_step: number;
    }>(this.baseUrl, 'POST', `/guard/${this.handleId}/mask`);
    return {
      permitted: raw.permitted,
      inZone: raw.in_zone,
      generationStep: raw.generation_step,
    };
  }

  async observe(tokenId: number): Promise<{ events: RegionEvent[]; done: boolean }> {
    this.assertOpen();
    return request(this.baseUrl, 'POST', `/guard/${this.handleId}/observe`, {
      token_id: tokenId,
    });
  }

  async close(): Promise<void> {
    this.assertOpen();
    await request(this.baseUrl, 'DELETE', `/guard/${this.handleId}`);
    this.closed = true;
  }
}

export class PkgguardClient {
  constructor(private readonly baseUrl: string) {}

  async health(): Promise<{ status: string }> {
    return request(this.baseUrl, 'GET', '/health');
  }

  async openGuard(options: OpenGuardOptions): Promise<GuardHandle> {
    const raw = await request<{ handle_id: string; vocab_size: number }>(
      this.baseUrl,
      'POST',
      '/guard/open',
      {
        checkpoint_path: options.checkpointPath,
        list_path: options.listPath,
        vocab_path: options.vocabPath,
        profile: options.profile ?? 'pypi',
        policy: options.policy ?? 'force_newline',
        bare_commands: options.bareCommands ?? false,
      },
    );
    return new GuardHandle(this.baseUrl, raw.handle_id, raw.vocab_size);
  }

  /** Ask the service to write a deterministic list/checkpoint/vocab triple. */
  async createSyntheticFixture(
    outDir: string,
    listSize: number,
    vocabSize: number,
    seed: number,
  ): Promise<SyntheticFixture> {
    const raw = await request<{
      list_path: string;
      checkpoint_path: string;
      vocab_path: string;
      list_digest: string;
    }>(this.baseUrl, 'POST', '/fixtures/synthetic', {
      out_dir: outDir,
      list_size: listSize,
      vocab_size: vocabSize,
      seed,
    });
    return {
      listPath: raw.list_path,
      checkpointPath: raw.checkpoint_path,
      vocabPath: raw.vocab_path,
      listDigest: raw.list_digest,
    };
  }

  /** Run one seeded episode server-side and return its reference masks. */
  async replayEpisode(params: {
    checkpointPath: string;
    vocabPath: string;
    listPath?: string;
    seed: number;
    scriptIndex?: number;
    maxTokens?: number;
  }): Promise<ReplayResult> {
    const raw = await request<{
      steps: { token_id: number; logits: number[]; masked_logits: number[] }[];
      text: string;
      events: RegionEvent[];
    }>(this.baseUrl, 'POST', '/episodes/replay', {
      checkpoint_path: params.checkpointPath,
      vocab_path: params.vocabPath,
      list_path: params.listPath,
      seed: params.seed,
      script_index: params.scriptIndex ?? 0,
      max_tokens: params.maxTokens ?? 48,
    });
    return {
      steps: raw.steps.map((s) => ({
        tokenId: s.token_id,
        logits: s.logits,
        maskedLogits: s.masked_logits,
      })),
      text: raw.text,
      events: raw.events,
    };
  }

  async checkNames(listPath: string, names: string[]): Promise<Record<string, boolean>> {
    const raw = await request<{ results: Record<string, boolean> }>(
      this.baseUrl,
      'POST',
      '/lists/check',
      { list_path: listPath, names },
    );
    return raw.results;
  }
}
