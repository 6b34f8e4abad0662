import { LexiconRule } from './types.js';

export interface PatternSpan {
    start: number;
    end: number; // exclusive character offset
    ruleId: string;
}

interface TokenPosition {
    text: string;
    start: number;
    end: number;
}

function tokenize(text: string): TokenPosition[] {
    const tokens: TokenPosition[] = [];
    const regex = /\S+/g;
    let match: RegExpExecArray | null;
    while ((match = regex.exec(text)) !== null) {
        tokens.push({ text: match[0], start: match.index, end: match.index + match[0].length });
    }
    return tokens;
}

function tokensMatch(window: TokenPosition[], pattern: string[], caseSensitive: boolean): boolean {
    return window.every((token, i) => {
        const expected = pattern[i] ?? '';
        return caseSensitive
            ? token.text === expected
            : token.text.toLowerCase() === expected.toLowerCase();
    });
}

/** Character spans where lexicon patterns match, mirroring the server's
 * longest-match-first, left-to-right, token-boundary semantics so the
 * highlights line up with the precomputed suggestion. */
export function findPatternSpans(text: string, rules: LexiconRule[]): PatternSpan[] {
    if (rules.length === 0) {
        return [];
    }
    const ordered = [...rules].sort((a, b) => {
        const byLength = b.pattern.split(/\s+/).length - a.pattern.split(/\s+/).length;
        return byLength !== 0 ? byLength : a.rule_id.localeCompare(b.rule_id);
    });
    const tokens = tokenize(text);
    const spans: PatternSpan[] = [];
    let position = 0;
    while (position < tokens.length) {
        let matched = false;
        for (const rule of ordered) {
            const pattern = rule.pattern.split(/\s+/).filter((p) => p.length > 0);
            const window = tokens.slice(position, position + pattern.length);
            if (window.length < pattern.length) {
                continue;
            }
            if (tokensMatch(window, pattern, rule.case_sensitive)) {
                const first = window[0];
                const last = window[window.length - 1];
                if (first && last) {
                    spans.push({ start: first.start, end: last.end, ruleId: rule.rule_id });
                }
                position += pattern.length;
                matched = true;
                break;
            }
        }
        if (!matched) {
            position += 1;
        }
    }
    return spans;
}

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, '&amp;')
        .replace(/</g, '&lt;')
        .replace(/>/g, '&gt;')
        .replace(/"/g, '&quot;')
        .replace(/'/g, '&#039;');
}

/** Render text with matched pattern spans wrapped in <mark> tags. */
export function renderHighlighted(text: string, spans: PatternSpan[]): string {
    if (spans.length === 0) {
        return escapeHtml(text);
    }
    const sorted = [...spans].sort((a, b) => a.start - b.start);
    const parts: string[] = [];
    let cursor = 0;
    for (const span of sorted) {
        parts.push(escapeHtml(text.slice(cursor, span.start)));
        parts.push(
            `<mark class="abbrev" data-rule="${escapeHtml(span.ruleId)}">` +
                escapeHtml(text.slice(span.start, span.end)) +
                '</mark>'
        );
        cursor = span.end;
    }
    parts.push(escapeHtml(text.slice(cursor)));
    return parts.join('');
}
