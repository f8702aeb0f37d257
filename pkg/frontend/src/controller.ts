import { ApiClient } from './api.js'
import { AnswerabilityForm, RankingForm, SalienceForm } from './state.js'
import type { RankingPayload, Task } from './types.js'

/**
 * Headless task loop: fetch a task, capture form input, submit, advance.
 * The DOM layer subscribes to onTask/onError; tests drive it directly.
 */
export class Workbench {
  current: Task | null = null
  onTask: (task: Task | null) => void = () => {}
  onError: (message: string) => void = () => {}

  constructor(
    private api: ApiClient,
    private annotator: string,
  ) {}

  async start(): Promise<Task | null> {
    return this.advance()
  }

  private async advance(): Promise<Task | null> {
    this.current = await this.api.nextTask(this.annotator)
    this.onTask(this.current)
    return this.current
  }

  newForm(): SalienceForm | AnswerabilityForm | RankingForm {
    if (!this.current) throw new Error('no active task')
    switch (this.current.kind) {
      case 'salience':
        return new SalienceForm()
      case 'answerability':
        return new AnswerabilityForm()
      case 'ranking': {
        const payload = this.current.payload as RankingPayload
        return new RankingForm(payload.candidates.map((c) => c.candidate_id))
      }
    }
  }

  /** Submit the completed form for the active task, then fetch the next one.
   *  Server-side validation failures surface through onError verbatim and
   *  keep the current task on screen. */
  async submit(form: SalienceForm | AnswerabilityForm | RankingForm): Promise<Task | null> {
    if (!this.current) throw new Error('no active task')
    if (!form.isValid()) throw new Error('form is not complete')
    const task = this.current
    try {
      if (form instanceof SalienceForm) {
        await this.api.submitSalience(task.task_id, this.annotator, form.score!, form.rationale)
      } else if (form instanceof AnswerabilityForm) {
        await this.api.submitAnswerability(task.task_id, this.annotator, form.score!)
      } else {
        await this.api.submitRanking(task.task_id, this.annotator, form.order)
      }
    } catch (error) {
      this.onError(error instanceof Error ? error.message : String(error))
      throw error
    }
    return this.advance()
  }
}
