import { describe, expect, it } from 'vitest'

import { ApiClient, ApiError } from '../src/api.js'

function fakeFetch(status: number, body: unknown) {
  const calls: Array<{ url: string; init?: RequestInit }> = []
  const fetchFn = async (url: string, init?: RequestInit) => {
    calls.push({ url, init })
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'Content-Type': 'application/json' },
    })
  }
  return { fetchFn, calls }
}

describe('ApiClient', () => {
  it('fetches the next task for an annotator', async () => {
    const { fetchFn, calls } = fakeFetch(200, {
      task: { task_id: 'sal:q1', kind: 'salience', payload: {}, annotator_id: 'ann' },
    })
    const client = new ApiClient('http://server', fetchFn)
    const task = await client.nextTask('ann 1')
    expect(task?.task_id).toBe('sal:q1')
    expect(calls[0].url).toBe('http://server/tasks/next?annotator=ann%201')
  })

  it('returns null when the queue is empty', async () => {
    const { fetchFn } = fakeFetch(200, { task: null })
    const client = new ApiClient('http://server', fetchFn)
    expect(await client.nextTask('ann')).toBeNull()
  })

  it('posts salience submissions with the server schema', async () => {
    const { fetchFn, calls } = fakeFetch(200, { ok: true, seq: 1 })
    const client = new ApiClient('http://server', fetchFn)
    await client.submitSalience('sal:q1', 'ann', 4, 'because it matters')
    expect(calls[0].url).toBe('http://server/annotations/salience')
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      task_id: 'sal:q1',
      annotator_id: 'ann',
      score: 4,
      rationale: 'because it matters',
    })
  })

  it('posts ranking order as a candidate id list', async () => {
    const { fetchFn, calls } = fakeFetch(200, { ok: true, seq: 2 })
    const client = new ApiClient('http://server', fetchFn)
    await client.submitRanking('rank:a1', 'ann', ['c2', 'c1', 'c3'])
    expect(JSON.parse(String(calls[0].init?.body)).order).toEqual(['c2', 'c1', 'c3'])
  })

  it('surfaces the server validation detail verbatim', async () => {
    const { fetchFn } = fakeFetch(422, { detail: 'rationale must be non-empty' })
    const client = new ApiClient('http://server', fetchFn)
    await expect(client.submitSalience('sal:q1', 'ann', 4, '')).rejects.toThrowError(
      'rationale must be non-empty',
    )
    await expect(client.submitSalience('sal:q1', 'ann', 4, '')).rejects.toBeInstanceOf(ApiError)
  })
})
