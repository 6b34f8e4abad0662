import { describe, expect, it } from 'vitest';
import { renderDiff, tokenDiff } from '../src/diff.js';

describe('tokenDiff', () => {
    it('returns one equal run for identical text', () => {
        expect(tokenDiff('a b c', 'a b c')).toEqual([{ kind: 'equal', text: 'a b c' }]);
    });

    it('marks a replaced token as removed plus added', () => {
        const ops = tokenDiff('không có PMH', 'không có tiền');
        expect(ops).toEqual([
            { kind: 'equal', text: 'không có' },
            { kind: 'removed', text: 'PMH' },
            { kind: 'added', text: 'tiền' }
        ]);
    });

    it('handles pure insertion', () => {
        expect(tokenDiff('a c', 'a b c')).toEqual([
            { kind: 'equal', text: 'a' },
            { kind: 'added', text: 'b' },
            { kind: 'equal', text: 'c' }
        ]);
    });

    it('handles pure deletion', () => {
        expect(tokenDiff('a b c', 'a c')).toEqual([
            { kind: 'equal', text: 'a' },
            { kind: 'removed', text: 'b' },
            { kind: 'equal', text: 'c' }
        ]);
    });

    it('treats whitespace runs as token separators only', () => {
        expect(tokenDiff('a  b', 'a b')).toEqual([{ kind: 'equal', text: 'a b' }]);
    });

    it('handles empty sides', () => {
        expect(tokenDiff('', 'a b')).toEqual([{ kind: 'added', text: 'a b' }]);
        expect(tokenDiff('a b', '')).toEqual([{ kind: 'removed', text: 'a b' }]);
    });
});

describe('renderDiff', () => {
    it('renders del and ins elements', () => {
        const html = renderDiff(tokenDiff('x PMH y', 'x mới y'));
        expect(html).toContain('<del class="diff-removed">PMH</del>');
        expect(html).toContain('<ins class="diff-added">mới</ins>');
    });

    it('escapes html inside tokens', () => {
        const html = renderDiff(tokenDiff('<i>', '<b>'));
        expect(html).not.toContain('<i>');
        expect(html).toContain('&lt;i&gt;');
    });
});
