import type { Task } from './types.js'

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(detail)
    this.name = 'ApiError'
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

/** Thin typed client over the annotation server endpoints. */
export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path
  }

  private async parseError(response: Response): Promise<never> {
    let detail = `${response.status} ${response.statusText}`
    try {
      const body = (await response.json()) as { detail?: unknown }
      if (body && body.detail !== undefined) {
        // surface the server's validation message verbatim
        detail = typeof body.detail === 'string' ? body.detail : JSON.stringify(body.detail)
      }
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new ApiError(response.status, detail)
  }

  async nextTask(annotator: string): Promise<Task | null> {
    const response = await this.fetchFn(
      this.url(`/tasks/next?annotator=${encodeURIComponent(annotator)}`),
    )
    if (!response.ok) await this.parseError(response)
    const body = (await response.json()) as { task: Task | null }
    return body.task
  }

  private async post(path: string, body: unknown): Promise<void> {
    const response = await this.fetchFn(this.url(path), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    })
    if (!response.ok) await this.parseError(response)
  }

  async submitSalience(
    taskId: string,
    annotator: string,
    score: number,
    rationale: string,
  ): Promise<void> {
    await this.post('/annotations/salience', {
      task_id: taskId,
      annotator_id: annotator,
      score,
      rationale,
    })
  }

  async submitAnswerability(taskId: string, annotator: string, score: number): Promise<void> {
    await this.post('/annotations/answerability', {
      task_id: taskId,
      annotator_id: annotator,
      score,
    })
  }

  async submitRanking(taskId: string, annotator: string, order: string[]): Promise<void> {
    await this.post('/rankings', { task_id: taskId, annotator_id: annotator, order })
  }
}
