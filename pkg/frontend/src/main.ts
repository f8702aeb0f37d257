import { ApiClient } from './api.js'
import { Workbench } from './controller.js'
import { renderDoneView, renderTask } from './views.js'
import type { Task } from './types.js'

function mount(): void {
  const app = document.getElementById('app')
  if (!app) throw new Error('missing #app mount point')

  const loginForm = document.createElement('form')
  loginForm.className = 'login'
  const input = document.createElement('input')
  input.placeholder = 'annotator id'
  input.required = true
  const go = document.createElement('button')
  go.type = 'submit'
  go.textContent = 'Start annotating'
  loginForm.appendChild(input)
  loginForm.appendChild(go)
  app.appendChild(loginForm)

  loginForm.addEventListener('submit', (event) => {
    event.preventDefault()
    const annotator = input.value.trim()
    if (!annotator) return
    app.textContent = ''
    void run(app, annotator)
  })
}

async function run(app: HTMLElement, annotator: string): Promise<void> {
  const api = new ApiClient('')
  const workbench = new Workbench(api, annotator)

  workbench.onTask = (task: Task | null) => {
    app.textContent = ''
    if (task === null) {
      app.appendChild(renderDoneView())
      return
    }
    const form = workbench.newForm()
    const view = renderTask(task, form, () => {
      void workbench.submit(form).catch(() => {
        // submit failure: the error is already on screen; the task stays
      })
    })
    workbench.onError = view.showError
    app.appendChild(view.root)
  }

  await workbench.start()
}

mount()
