import { describe, expect, it } from 'vitest';
import { LexiconRule, Progress, Task } from '../src/types.js';
import { renderDone, renderProgress, renderTask } from '../src/view.js';

const task: Task = {
    task_id: 7,
    uid: 'dev-3',
    field: 'premise',
    source_text: 'Patient has no PMH',
    machine_text: 'Bệnh nhân không có PMH',
    suggested_text: 'Bệnh nhân không có tiền sử bệnh',
    suggested_rule_ids: ['pmh'],
    status: 'claimed',
    claimant: 'ann',
    claim_expiry: 123456.0,
    final_text: null
};

const rules: LexiconRule[] = [
    {
        rule_id: 'pmh',
        pattern: 'PMH',
        action: 'expand_vietnamese',
        replacement: 'tiền sử bệnh',
        case_sensitive: true,
        notes: ''
    },
    {
        rule_id: 'other',
        pattern: 'XYZ',
        action: 'keep_english',
        replacement: '',
        case_sensitive: true,
        notes: ''
    }
];

const progress: Progress = {
    open: 2,
    claimed: 1,
    submitted: 1,
    total: 4,
    all_submitted: false,
    by_annotator: { ann: 1 }
};

describe('renderTask', () => {
    it('shows the three text panes', () => {
        const html = renderTask(task, rules);
        expect(html).toContain('English source');
        expect(html).toContain('Machine translation');
        expect(html).toContain('Suggestion (rules applied)');
        expect(html).toContain('Patient has no PMH');
        // The machine pane wraps the abbreviation in a highlight mark.
        expect(html).toContain('Bệnh nhân không có <mark');
        expect(html).toContain('Bệnh nhân không có tiền sử bệnh');
    });

    it('highlights matched abbreviation patterns in the machine pane', () => {
        const html = renderTask(task, rules);
        expect(html).toContain('<mark class="abbrev" data-rule="pmh">PMH</mark>');
    });

    it('lists only the rules that fired', () => {
        const html = renderTask(task, rules);
        expect(html).toContain('[pmh]');
        expect(html).not.toContain('[other]');
    });

    it('initializes the edit buffer to the suggestion', () => {
        const html = renderTask(task, rules);
        expect(html).toContain('>Bệnh nhân không có tiền sử bệnh</textarea>');
    });

    it('shows the machine-vs-suggestion diff', () => {
        const html = renderTask(task, rules);
        expect(html).toContain('<del class="diff-removed">PMH</del>');
        expect(html).toContain('<ins class="diff-added">tiền sử bệnh</ins>');
    });

    it('is a pure function of the payload', () => {
        expect(renderTask(task, rules)).toBe(renderTask(task, rules));
    });

    it('carries accept and submit actions', () => {
        const html = renderTask(task, rules);
        expect(html).toContain('id="accept-btn"');
        expect(html).toContain('id="submit-btn"');
    });
});

describe('renderProgress', () => {
    it('reports counts and closed gate', () => {
        const html = renderProgress(progress);
        expect(html).toContain('1 / 4 submitted');
        expect(html).toContain('gate-closed');
        expect(html).toContain('width: 25%');
    });

    it('opens the gate only at 100% submitted', () => {
        const done: Progress = {
            open: 0,
            claimed: 0,
            submitted: 4,
            total: 4,
            all_submitted: true,
            by_annotator: { ann: 4 }
        };
        expect(renderProgress(done)).toContain('gate-open');
    });
});

describe('renderDone', () => {
    it('shows the completion screen with progress', () => {
        const html = renderDone(progress);
        expect(html).toContain('Queue drained');
        expect(html).toContain('1 / 4 submitted');
    });
});
