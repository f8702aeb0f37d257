// Guideline captions shown inline next to each choice, so new annotators see
// the same schema the original raters were trained on.

export const SALIENCE_CAPTIONS: Record<number, string> = {
  0:
    'Invalid: the question has grammar errors, is not anchored in the ' +
    'highlighted sentence, bundles multiple sub-questions, or misinterprets ' +
    'the context.',
  1: 'The question is not very related to the topic.',
  2:
    'Related to the context and anchor, but asking it seems like a stretch; ' +
    'answering it does not help make the article feel complete (often ' +
    'already answered by the context).',
  3:
    'Related, but answering it does not matter much; the answer may or may ' +
    'not enhance understanding of the article.',
  4:
    'Answering is somewhat useful: it might clarify a newly introduced ' +
    'concept or expand on an idea already introduced, with some uncertainty.',
  5:
    'This question should definitely be answered next: it clarifies a ' +
    'concept in the anchor sentence, asks about surprising events, or asks ' +
    'for more about newly introduced people; essential to the narrative.',
}

export const SALIENCE_LABELS: Record<number, string> = {
  0: 'Invalid',
  1: '1',
  2: '2',
  3: '3',
  4: '4',
  5: '5',
}

export const ANSWERABILITY_CAPTIONS: Record<number, string> = {
  0: 'Already answered by the preceding context and the anchor sentence.',
  1: 'Not answered by the rest of the article.',
  2: 'Partially answered by the rest of the article.',
  3: 'Fully answered by the rest of the article.',
}

export const RANKING_HINT =
  'Drag the three candidate summaries into order, best at the top. ' +
  'Judge content coverage, not style.'
