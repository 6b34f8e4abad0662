import { renderDiff, tokenDiff } from './diff.js';
import { escapeHtml, findPatternSpans, renderHighlighted } from './highlight.js';
import { LexiconRule, Progress, Task } from './types.js';

// Renderers are pure functions of their inputs: the same payload always
// produces the same markup, which keeps them directly testable.

export function renderProgress(progress: Progress): string {
    const percent =
        progress.total === 0 ? 0 : Math.round((progress.submitted / progress.total) * 100);
    const gate = progress.all_submitted
        ? '<span class="gate gate-open">export gate open</span>'
        : '<span class="gate gate-closed">export gate closed</span>';
    return `
        <div class="progress">
            <div class="progress-bar"><div class="progress-fill" style="width: ${percent}%"></div></div>
            <div class="progress-text">
                ${progress.submitted} / ${progress.total} submitted
                (${progress.open} open, ${progress.claimed} claimed) ${gate}
            </div>
        </div>`;
}

export function renderTask(task: Task, rules: LexiconRule[]): string {
    const activeRules = rules.filter((rule) => task.suggested_rule_ids.includes(rule.rule_id));
    const machineSpans = findPatternSpans(task.machine_text, activeRules);
    const suggestedSpans = findPatternSpans(task.suggested_text, activeRules);
    const ruleNotes = activeRules
        .map(
            (rule) =>
                `<li><code>${escapeHtml(rule.pattern)}</code> &rarr; ` +
                `${rule.action === 'keep_english' ? 'keep as-is' : escapeHtml(rule.replacement)}` +
                ` <span class="rule-id">[${escapeHtml(rule.rule_id)}]</span></li>`
        )
        .join('');
    return `
        <div class="task" data-task-id="${task.task_id}" data-uid="${escapeHtml(task.uid)}">
            <div class="task-meta">
                <span class="uid">${escapeHtml(task.uid)}</span>
                <span class="field">${escapeHtml(task.field)}</span>
            </div>
            <div class="panes">
                <section class="pane pane-source">
                    <h3>English source</h3>
                    <p>${escapeHtml(task.source_text) || '<em>not recorded</em>'}</p>
                </section>
                <section class="pane pane-machine">
                    <h3>Machine translation</h3>
                    <p>${renderHighlighted(task.machine_text, machineSpans)}</p>
                </section>
                <section class="pane pane-suggestion">
                    <h3>Suggestion (rules applied)</h3>
                    <p>${renderHighlighted(task.suggested_text, suggestedSpans)}</p>
                    ${ruleNotes ? `<ul class="rule-notes">${ruleNotes}</ul>` : ''}
                </section>
            </div>
            <div class="editor">
                <h3>Final text</h3>
                <textarea id="edit-buffer" rows="4">${escapeHtml(task.suggested_text)}</textarea>
                <div class="diff" id="diff-view">${renderDiff(
                    tokenDiff(task.machine_text, task.suggested_text)
                )}</div>
                <div class="actions">
                    <button id="accept-btn" title="Alt+A">Accept suggestion</button>
                    <button id="submit-btn" title="Ctrl+Enter">Submit</button>
                </div>
            </div>
        </div>`;
}

export function renderDone(progress: Progress): string {
    return `
        <div class="done">
            <h2>Queue drained</h2>
            <p>All available tasks are claimed or submitted. Thank you!</p>
            ${renderProgress(progress)}
        </div>`;
}

export function renderError(message: string): string {
    return `
        <div class="error-banner">
            <strong>Problem:</strong> ${escapeHtml(message)}
            <button id="retry-btn">Retry</button>
        </div>`;
}

export function renderNotice(message: string): string {
    return `<div class="notice">${escapeHtml(message)}</div>`;
}
