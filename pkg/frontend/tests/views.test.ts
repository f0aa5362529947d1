import { describe, expect, it } from 'vitest';

import type { ReviewItem, TraceHit } from '../src/types.js';
import {
  clampK,
  escapeHtml,
  formatConfidence,
  formatSimilarity,
  renderConfirmation,
  renderErrorBanner,
  renderItemDetail,
  renderQueue,
  renderTraceHits,
} from '../src/views.js';

function sampleItem(overrides: Partial<ReviewItem> = {}): ReviewItem {
  return {
    item_id: 'item-000001',
    result: {
      pair: { pair_id: 'p1', base_title: 'coke zero <1l>', compared_title: 'pepsi max 2l' },
      verdict: {
        label: 'Equivalent',
        dimension_status: { Brand: 'Match', CoreProductName: 'Match', Variant: 'Unknown', Specification: 'Match', Quantity: 'Mismatch' },
        confidence: 0.4,
        rationale: 'uncertain token overlap',
        provenance: 'q2k_fresh',
      },
      questions: [
        { question_id: 'p1-q1', pair_id: 'p1', text: 'Same maker?', dimension: 'Brand' },
      ],
      answers: [
        {
          question_id: 'p1-q1',
          answer_text: 'both list the same maker',
          sources: [{ url: 'https://catalog.example/x', snippet: 'maker listed' }],
          resolved_by: 'fresh_search',
        },
      ],
      dedup_activated: false,
      web_queries_issued: 1,
      wall_time_ms: 0,
    },
    status: 'pending',
    reviewer_note: null,
    corrected_label: null,
    decided_at: null,
    reason: 'confidence 0.4 below threshold 0.7',
    ...overrides,
  };
}

function sampleHit(overrides: Partial<TraceHit> = {}): TraceHit {
  return {
    trace_id: 1,
    concat_key: 'Question1: Same maker?',
    similarity: 0.99995,
    validation_status: 'human_validated',
    questions: { pair_id: 'p1', questions: [] },
    answers: {
      pair_id: 'p1',
      answers: [{ question_id: 'p1-q1', answer_text: 'yes', sources: [], resolved_by: 'reused_trace' }],
    },
    created_at: 0,
    ...overrides,
  };
}

describe('escapeHtml', () => {
  it('escapes markup-significant characters', () => {
    expect(escapeHtml(`<b>&"'`)).toBe('&lt;b&gt;&amp;&quot;&#39;');
  });
});

describe('formatting', () => {
  it('confidence renders with two decimals', () => {
    expect(formatConfidence(0.4)).toBe('0.40');
  });

  it('similarity renders with four decimals', () => {
    expect(formatSimilarity(0.99995)).toBe('1.0000');
    expect(formatSimilarity(0.5)).toBe('0.5000');
  });

  it('clampK keeps the slider inside 1..20', () => {
    expect(clampK(0)).toBe(1);
    expect(clampK(5)).toBe(5);
    expect(clampK(99)).toBe(20);
    expect(clampK(Number.NaN)).toBe(5);
  });
});

describe('renderQueue', () => {
  it('renders the explicit empty state', () => {
    expect(renderQueue([])).toContain('No pending reviews.');
  });

  it('renders one card per item, in order', () => {
    const items = [sampleItem(), sampleItem({ item_id: 'item-000002' })];
    const html = renderQueue(items);
    expect(html.indexOf('item-000001')).toBeGreaterThan(-1);
    expect(html.indexOf('item-000001')).toBeLessThan(html.indexOf('item-000002'));
    expect((html.match(/queue-card/g) ?? []).length).toBe(2);
  });

  it('escapes titles', () => {
    const html = renderQueue([sampleItem()]);
    expect(html).toContain('coke zero &lt;1l&gt;');
    expect(html).not.toContain('<1l>');
  });
});

describe('renderItemDetail', () => {
  it('shows every reviewer-relevant field', () => {
    const html = renderItemDetail(sampleItem());
    expect(html).toContain('coke zero &lt;1l&gt;');
    expect(html).toContain('pepsi max 2l');
    expect(html).toContain('Equivalent · 0.40');
    expect(html).toContain('Quantity');
    expect(html).toContain('Same maker?');
    expect(html).toContain('both list the same maker');
    expect(html).toContain('https://catalog.example/x');
    expect(html).toContain('uncertain token overlap');
  });

  it('offers approve and override controls only while pending', () => {
    const pending = renderItemDetail(sampleItem());
    expect(pending).toContain('data-action="approve"');
    expect(pending).toContain('data-action="override"');
    const decided = renderItemDetail(sampleItem({ status: 'approved' }));
    expect(decided).not.toContain('data-action="approve"');
    expect(decided).toContain('approved');
  });
});

describe('renderConfirmation', () => {
  it('spells out the consequence and offers confirm/cancel', () => {
    const html = renderConfirmation('item-000001', 'Approve item-000001?');
    expect(html).toContain('permanently');
    expect(html).toContain('data-action="confirm"');
    expect(html).toContain('data-action="cancel"');
  });
});

describe('renderTraceHits', () => {
  it('renders the empty state', () => {
    expect(renderTraceHits([])).toContain('No stored traces match');
  });

  it('renders rank, similarity, and validation status per hit', () => {
    const html = renderTraceHits([sampleHit(), sampleHit({ trace_id: 2, similarity: 0.25 })]);
    expect(html).toContain('#1');
    expect(html).toContain('#2');
    expect(html).toContain('similarity 1.0000');
    expect(html).toContain('similarity 0.2500');
    expect(html).toContain('human_validated');
    expect(html).toContain('Question1: Same maker?');
  });
});

describe('renderErrorBanner', () => {
  it('includes the message and a retry control', () => {
    const html = renderErrorBanner('service down & unreachable');
    expect(html).toContain('service down &amp; unreachable');
    expect(html).toContain('data-action="retry"');
  });
});
