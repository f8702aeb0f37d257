// Wire types mirroring the annotation server's JSON payloads.

export type TaskKind = 'salience' | 'answerability' | 'ranking'

export interface SaliencePayload {
  question_id: string
  question: string
  preceding: string
  anchor: string
  anchor_index: number
  article_id: string
}

export interface AnswerabilityPayload {
  question_id: string
  question: string
  preceding: string
  anchor: string
  subsequent: string
  article_id: string
}

export interface RankingCandidate {
  candidate_id: string
  text: string
}

export interface RankingPayload {
  article_id: string
  tldr: string
  candidates: RankingCandidate[]
}

export interface Task {
  task_id: string
  kind: TaskKind
  payload: SaliencePayload | AnswerabilityPayload | RankingPayload
  annotator_id: string
}

export function isSaliencePayload(p: unknown): p is SaliencePayload {
  const o = p as Record<string, unknown>
  return (
    !!o &&
    typeof o.question === 'string' &&
    typeof o.anchor === 'string' &&
    typeof o.preceding === 'string'
  )
}

export function isAnswerabilityPayload(p: unknown): p is AnswerabilityPayload {
  return (
    isSaliencePayload(p) &&
    typeof (p as unknown as Record<string, unknown>).subsequent === 'string'
  )
}

export function isRankingPayload(p: unknown): p is RankingPayload {
  const o = p as Record<string, unknown>
  return !!o && typeof o.tldr === 'string' && Array.isArray(o.candidates)
}
