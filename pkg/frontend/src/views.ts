import type { Answer, ReviewItem, TraceHit } from './types.js';

/** Escape text for safe interpolation into HTML. */
export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

export function formatConfidence(confidence: number): string {
  return confidence.toFixed(2);
}

export function formatSimilarity(similarity: number): string {
  return similarity.toFixed(4);
}

/** k is a slider value; keep it inside the service's accepted range. */
export function clampK(k: number): number {
  if (!Number.isFinite(k)) return 5;
  return Math.min(20, Math.max(1, Math.round(k)));
}

function badge(text: string, kind: string): string {
  return `<span class="badge badge-${kind}">${escapeHtml(text)}</span>`;
}

function verdictBadge(label: string, confidence: number): string {
  const kind = label === 'Equivalent' ? 'equivalent' : 'nonequivalent';
  return badge(`${label} · ${formatConfidence(confidence)}`, kind);
}

export function renderErrorBanner(message: string): string {
  return `<div class="banner banner-error" role="alert">
    ${escapeHtml(message)}
    <button type="button" data-action="retry">Retry</button>
  </div>`;
}

export function renderQueue(items: ReviewItem[]): string {
  if (items.length === 0) {
    return '<p class="empty-state">No pending reviews.</p>';
  }
  const cards = items.map((item) => {
    const r = item.result;
    return `<article class="card queue-card" data-item-id="${escapeHtml(item.item_id)}">
      <header>
        <code>${escapeHtml(item.item_id)}</code>
        ${verdictBadge(r.verdict.label, r.verdict.confidence)}
      </header>
      <p class="title-pair">
        <span class="title">${escapeHtml(r.pair.base_title)}</span>
        <span class="vs">vs</span>
        <span class="title">${escapeHtml(r.pair.compared_title)}</span>
      </p>
      <p class="reason">${escapeHtml(item.reason)}</p>
      <button type="button" data-action="open" data-item-id="${escapeHtml(item.item_id)}">Review</button>
    </article>`;
  });
  return `<div class="queue">${cards.join('\n')}</div>`;
}

function renderSources(answer: Answer): string {
  if (answer.sources.length === 0) return '';
  const links = answer.sources.map(
    (s) =>
      `<li><a href="${escapeHtml(s.url)}" target="_blank" rel="noopener noreferrer">${escapeHtml(
        s.url,
      )}</a> — ${escapeHtml(s.snippet)}</li>`,
  );
  return `<ul class="sources">${links.join('')}</ul>`;
}

function renderEvidence(item: ReviewItem): string {
  const r = item.result;
  if (r.questions.length === 0) {
    return '<p class="empty-state">No disambiguation questions were generated for this pair.</p>';
  }
  const byQuestion = new Map(r.answers.map((a) => [a.question_id, a]));
  const rows = r.questions.map((q) => {
    const answer = byQuestion.get(q.question_id);
    const answerHtml = answer
      ? `<p class="answer">${escapeHtml(answer.answer_text)}</p>${renderSources(answer)}
         <p class="resolved-by">resolved by: ${escapeHtml(answer.resolved_by)}</p>`
      : '<p class="answer answer-missing">unanswered</p>';
    return `<li class="evidence-row">
      <p class="question">${badge(q.dimension, 'dimension')} ${escapeHtml(q.text)}</p>
      ${answerHtml}
    </li>`;
  });
  return `<ol class="evidence">${rows.join('\n')}</ol>`;
}

function renderDimensionTable(item: ReviewItem): string {
  const entries = Object.entries(item.result.verdict.dimension_status);
  const rows = entries.map(
    ([dim, status]) =>
      `<tr><td>${escapeHtml(dim)}</td><td>${badge(status, status.toLowerCase())}</td></tr>`,
  );
  return `<table class="dimensions"><tbody>${rows.join('')}</tbody></table>`;
}

export function renderItemDetail(item: ReviewItem): string {
  const r = item.result;
  const pending = item.status === 'pending';
  const controls = pending
    ? `<div class="decision-controls" data-item-id="${escapeHtml(item.item_id)}">
        <label>Note <input type="text" data-field="note" placeholder="optional reviewer note"></label>
        <button type="button" data-action="approve">Approve</button>
        <label>Corrected label
          <select data-field="corrected-label">
            <option value="">choose…</option>
            <option value="Equivalent">Equivalent</option>
            <option value="NonEquivalent">NonEquivalent</option>
          </select>
        </label>
        <button type="button" data-action="override">Override</button>
      </div>`
    : `<p class="decided">Decision: ${badge(item.status, item.status)}${
        item.corrected_label ? ` corrected to ${badge(item.corrected_label, 'dimension')}` : ''
      }</p>`;
  return `<article class="card item-detail" data-item-id="${escapeHtml(item.item_id)}">
    <header>
      <code>${escapeHtml(item.item_id)}</code>
      ${verdictBadge(r.verdict.label, r.verdict.confidence)}
      ${badge(r.verdict.provenance, 'provenance')}
    </header>
    <dl class="pair-titles">
      <dt>Base</dt><dd>${escapeHtml(r.pair.base_title)}</dd>
      <dt>Compared</dt><dd>${escapeHtml(r.pair.compared_title)}</dd>
    </dl>
    ${renderDimensionTable(item)}
    <p class="rationale">${escapeHtml(r.verdict.rationale)}</p>
    <h3>Evidence</h3>
    ${renderEvidence(item)}
    ${controls}
    <button type="button" data-action="back">Back to queue</button>
  </article>`;
}

/** Confirmation step shown before any decision is posted. */
export function renderConfirmation(itemId: string, summary: string): string {
  return `<div class="banner banner-confirm" data-item-id="${escapeHtml(itemId)}">
    <p>${escapeHtml(summary)} This correction permanently enters the knowledge base.</p>
    <button type="button" data-action="confirm">Confirm</button>
    <button type="button" data-action="cancel">Cancel</button>
  </div>`;
}

export function renderTraceHits(hits: TraceHit[]): string {
  if (hits.length === 0) {
    return '<p class="empty-state">No stored traces match this query.</p>';
  }
  const cards = hits.map((hit, index) => {
    const answers = hit.answers.answers.map(
      (a) => `<li>${escapeHtml(a.answer_text)}</li>`,
    );
    return `<article class="card trace-card" data-trace-id="${hit.trace_id}">
      <header>
        <span class="rank">#${index + 1}</span>
        <span class="similarity">similarity ${formatSimilarity(hit.similarity)}</span>
        ${badge(hit.validation_status, hit.validation_status)}
      </header>
      <p class="concat-key">${escapeHtml(hit.concat_key)}</p>
      <ul class="trace-answers">${answers.join('')}</ul>
    </article>`;
  });
  return `<div class="trace-hits">${cards.join('\n')}</div>`;
}
