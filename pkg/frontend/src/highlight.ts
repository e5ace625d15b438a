// Best-effort client-side Python highlighting. The caller must fall back
// to plain text if this throws; textContent of the returned fragment is
// always byte-identical to the input.

const KEYWORDS = new Set([
    "False", "None", "True", "and", "as", "assert", "async", "await",
    "break", "class", "continue", "def", "del", "elif", "else", "except",
    "finally", "for", "from", "global", "if", "import", "in", "is",
    "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try",
    "while", "with", "yield",
]);

const TOKEN_RE =
    /(#[^\n]*)|("""[\s\S]*?"""|'''[\s\S]*?'''|"(?:\\.|[^"\\\n])*"|'(?:\\.|[^'\\\n])*')|\b(\d+(?:\.\d+)?)\b|\b([A-Za-z_][A-Za-z0-9_]*)\b/g;

function span(cls: string, text: string): HTMLSpanElement {
    const node = document.createElement("span");
    node.className = cls;
    node.textContent = text;
    return node;
}

export function highlightPython(code: string): DocumentFragment {
    const fragment = document.createDocumentFragment();
    let last = 0;
    for (const match of code.matchAll(TOKEN_RE)) {
        const index = match.index ?? 0;
        if (index > last) {
            fragment.append(document.createTextNode(code.slice(last, index)));
        }
        const [text, comment, str, num, word] = match;
        if (comment !== undefined) {
            fragment.append(span("tok-comment", text));
        } else if (str !== undefined) {
            fragment.append(span("tok-string", text));
        } else if (num !== undefined) {
            fragment.append(span("tok-number", text));
        } else if (word !== undefined && KEYWORDS.has(word)) {
            fragment.append(span("tok-keyword", text));
        } else {
            fragment.append(document.createTextNode(text));
        }
        last = index + text.length;
    }
    if (last < code.length) {
        fragment.append(document.createTextNode(code.slice(last)));
    }
    return fragment;
}
