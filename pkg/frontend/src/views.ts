import {
  ANSWERABILITY_CAPTIONS,
  RANKING_HINT,
  SALIENCE_CAPTIONS,
  SALIENCE_LABELS,
} from './guidelines.js'
import { AnswerabilityForm, RankingForm, SalienceForm } from './state.js'
import {
  isAnswerabilityPayload,
  isRankingPayload,
  isSaliencePayload,
  type AnswerabilityPayload,
  type RankingPayload,
  type SaliencePayload,
  type Task,
} from './types.js'

type SubmitHandler = () => void

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag)
  if (className) node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

export function renderErrorView(message: string): HTMLElement {
  const box = el('div', 'error-view')
  box.appendChild(el('h2', undefined, 'Cannot display task'))
  box.appendChild(el('p', 'error-message', message))
  return box
}

export function renderDoneView(): HTMLElement {
  const box = el('div', 'done-view')
  box.appendChild(el('h2', undefined, 'All tasks complete'))
  box.appendChild(el('p', undefined, 'There is nothing left in your queue. Thank you!'))
  return box
}

function contextBlock(preceding: string, anchor: string): HTMLElement {
  const block = el('div', 'context-block')
  if (preceding) {
    block.appendChild(el('span', 'preceding', preceding + ' '))
  }
  const mark = document.createElement('mark')
  mark.className = 'anchor'
  mark.textContent = anchor
  block.appendChild(mark)
  return block
}

function submitRow(
  form: { isValid(): boolean },
  onSubmit: SubmitHandler,
): { row: HTMLElement; refresh: () => void; showError: (message: string) => void } {
  const row = el('div', 'submit-row')
  const button = el('button', 'submit') as HTMLButtonElement
  button.type = 'button'
  button.textContent = 'Submit'
  button.disabled = true
  const error = el('p', 'server-error')
  error.hidden = true
  button.addEventListener('click', () => {
    if (form.isValid()) onSubmit()
  })
  row.appendChild(button)
  row.appendChild(error)
  return {
    row,
    refresh: () => {
      button.disabled = !form.isValid()
    },
    showError: (message: string) => {
      error.hidden = false
      error.textContent = message
    },
  }
}

export interface TaskViewHandle {
  root: HTMLElement
  showError: (message: string) => void
}

export function renderSalienceTask(
  task: Task,
  form: SalienceForm,
  onSubmit: SubmitHandler,
): TaskViewHandle {
  if (!isSaliencePayload(task.payload)) {
    return { root: renderErrorView('salience task payload is missing fields'), showError: () => {} }
  }
  const payload = task.payload as SaliencePayload
  const root = el('section', 'task salience-task')
  root.appendChild(el('h2', undefined, 'How salient is this question?'))
  root.appendChild(contextBlock(payload.preceding, payload.anchor))
  root.appendChild(el('p', 'question', payload.question))

  const { row, refresh, showError } = submitRow(form, onSubmit)

  const options = el('div', 'options')
  for (const score of [0, 1, 2, 3, 4, 5]) {
    const label = el('label', 'option')
    const input = document.createElement('input')
    input.type = 'radio'
    input.name = 'salience'
    input.value = String(score)
    input.addEventListener('change', () => {
      form.selectScore(score)
      refresh()
    })
    label.appendChild(input)
    label.appendChild(el('span', 'option-label', SALIENCE_LABELS[score]))
    label.appendChild(el('span', 'caption', SALIENCE_CAPTIONS[score]))
    options.appendChild(label)
  }
  root.appendChild(options)

  const rationale = document.createElement('textarea')
  rationale.className = 'rationale'
  rationale.placeholder = 'Why did you choose this score? (required)'
  rationale.addEventListener('input', () => {
    form.setRationale(rationale.value)
    refresh()
  })
  root.appendChild(rationale)
  root.appendChild(row)
  return { root, showError }
}

export function renderAnswerabilityTask(
  task: Task,
  form: AnswerabilityForm,
  onSubmit: SubmitHandler,
): TaskViewHandle {
  if (!isAnswerabilityPayload(task.payload)) {
    return {
      root: renderErrorView('answerability task payload is missing fields'),
      showError: () => {},
    }
  }
  const payload = task.payload as AnswerabilityPayload
  const root = el('section', 'task answerability-task')
  root.appendChild(el('h2', undefined, 'How fully does the rest of the article answer it?'))
  root.appendChild(contextBlock(payload.preceding, payload.anchor))
  root.appendChild(el('p', 'question', payload.question))
  root.appendChild(el('div', 'subsequent', payload.subsequent))

  const { row, refresh, showError } = submitRow(form, onSubmit)

  const options = el('div', 'options')
  for (const score of [0, 1, 2, 3]) {
    const label = el('label', 'option')
    const input = document.createElement('input')
    input.type = 'radio'
    input.name = 'answerability'
    input.value = String(score)
    input.addEventListener('change', () => {
      form.selectScore(score)
      refresh()
    })
    label.appendChild(input)
    label.appendChild(el('span', 'option-label', String(score)))
    label.appendChild(el('span', 'caption', ANSWERABILITY_CAPTIONS[score]))
    options.appendChild(label)
  }
  root.appendChild(options)
  root.appendChild(row)
  return { root, showError }
}

export function renderRankingTask(
  task: Task,
  form: RankingForm,
  onSubmit: SubmitHandler,
): TaskViewHandle {
  if (!isRankingPayload(task.payload) || (task.payload as RankingPayload).candidates.length !== 3) {
    return {
      root: renderErrorView('ranking task needs exactly three candidates'),
      showError: () => {},
    }
  }
  const payload = task.payload as RankingPayload
  const root = el('section', 'task ranking-task')
  root.appendChild(el('h2', undefined, 'Rank the three expanded summaries'))
  root.appendChild(el('p', 'hint', RANKING_HINT))
  root.appendChild(el('div', 'tldr', payload.tldr))

  const { row, refresh, showError } = submitRow(form, onSubmit)
  const texts = new Map(payload.candidates.map((c) => [c.candidate_id, c.text]))
  const list = el('ol', 'candidates')

  const redraw = () => {
    list.textContent = ''
    form.order.forEach((candidateId, index) => {
      const item = el('li', 'candidate')
      item.draggable = true
      item.dataset.candidateId = candidateId
      item.appendChild(el('span', 'position', `#${index + 1}`))
      item.appendChild(el('p', 'candidate-text', texts.get(candidateId) ?? ''))
      item.addEventListener('dragstart', (event) => {
        event.dataTransfer?.setData('text/plain', String(index))
      })
      item.addEventListener('dragover', (event) => event.preventDefault())
      item.addEventListener('drop', (event) => {
        event.preventDefault()
        const from = Number(event.dataTransfer?.getData('text/plain'))
        if (Number.isInteger(from)) {
          form.move(from, index)
          redraw()
        }
      })
      list.appendChild(item)
    })
    refresh()
  }
  redraw()

  root.appendChild(list)
  root.appendChild(row)
  return { root, showError }
}

export function renderTask(
  task: Task,
  form: SalienceForm | AnswerabilityForm | RankingForm,
  onSubmit: SubmitHandler,
): TaskViewHandle {
  switch (task.kind) {
    case 'salience':
      return renderSalienceTask(task, form as SalienceForm, onSubmit)
    case 'answerability':
      return renderAnswerabilityTask(task, form as AnswerabilityForm, onSubmit)
    case 'ranking':
      return renderRankingTask(task, form as RankingForm, onSubmit)
    default:
      return { root: renderErrorView(`unknown task kind ${String(task.kind)}`), showError: () => {} }
  }
}
