// Keyword highlighting from server-provided byte offsets.
//
// The API reports match_spans as byte offsets into the UTF-8 encoding of
// the excerpt text. They are applied directly, never re-tokenized: we
// convert byte offsets to character offsets and slice.
const encoder = new TextEncoder();
/** Map every byte offset that starts a character to its char offset. */
function byteToCharTable(text) {
    const table = new Map();
    let byteIndex = 0;
    let charIndex = 0;
    while (charIndex < text.length) {
        table.set(byteIndex, charIndex);
        const codePoint = text.codePointAt(charIndex);
        if (codePoint === undefined)
            break;
        const charLen = codePoint > 0xffff ? 2 : 1;
        byteIndex += encoder.encode(text.slice(charIndex, charIndex + charLen)).length;
        charIndex += charLen;
    }
    table.set(byteIndex, charIndex);
    return table;
}
/** Slice the substring addressed by one byte span. */
export function sliceByteSpan(text, span) {
    const table = byteToCharTable(text);
    const start = table.get(span[0]);
    const end = table.get(span[1]);
    if (start === undefined || end === undefined) {
        throw new Error(`byte span [${span[0]}, ${span[1]}) is not on character boundaries`);
    }
    return text.slice(start, end);
}
/**
 * Split text into ordered segments, marking the spans as highlighted.
 * Spans must be sorted and non-overlapping (the API guarantees this).
 */
export function byteSpansToSegments(text, spans) {
    if (spans.length === 0) {
        return [{ text, highlighted: false }];
    }
    const table = byteToCharTable(text);
    const segments = [];
    let cursor = 0;
    for (const [byteStart, byteEnd] of spans) {
        const start = table.get(byteStart);
        const end = table.get(byteEnd);
        if (start === undefined || end === undefined) {
            throw new Error(`byte span [${byteStart}, ${byteEnd}) is not on character boundaries`);
        }
        if (start > cursor) {
            segments.push({ text: text.slice(cursor, start), highlighted: false });
        }
        segments.push({ text: text.slice(start, end), highlighted: true });
        cursor = end;
    }
    if (cursor < text.length) {
        segments.push({ text: text.slice(cursor), highlighted: false });
    }
    return segments;
}
/**
 * The corpus matching rule, mirrored for verification: a k-token keyword
 * matches k consecutive tokens when each keyword token is a prefix of the
 * corresponding token (case-insensitive, edge punctuation trimmed).
 */
export function matchesKeyword(sliced, keyword) {
    const core = (token) => {
        let start = 0;
        let end = token.length;
        while (start < end && !/[\p{L}\p{N}]/u.test(token[start]))
            start += 1;
        while (end > start && !/[\p{L}\p{N}]/u.test(token[end - 1]))
            end -= 1;
        return token.slice(start, end).toLowerCase();
    };
    const keywordTokens = keyword.split(/\s+/).filter((t) => t.length > 0);
    const slicedTokens = sliced
        .split(/\s+/)
        .filter((t) => t.length > 0)
        .map(core);
    if (slicedTokens.length !== keywordTokens.length)
        return false;
    return keywordTokens.every((kt, i) => slicedTokens[i].startsWith(kt));
}
