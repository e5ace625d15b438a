import { describe, expect, it } from "vitest";

import { highlightPython } from "../src/highlight.js";

function render(code: string): HTMLElement {
    const host = document.createElement("code");
    host.append(highlightPython(code));
    return host;
}

describe("highlightPython", () => {
    it("preserves the text byte for byte", () => {
        const code = "def f(x):\n    return 'a # not comment' + x  # real comment\n";
        expect(render(code).textContent).toBe(code);
    });

    it("marks keywords, strings, comments, numbers", () => {
        const host = render("for i in range(10):  # loop\n    s = 'txt'\n");
        const classes = [...host.querySelectorAll("span")].map((s) => s.className);
        expect(classes).toContain("tok-keyword");
        expect(classes).toContain("tok-comment");
        expect(classes).toContain("tok-string");
        expect(classes).toContain("tok-number");
    });

    it("leaves identifiers unwrapped", () => {
        const host = render("variable = other");
        expect(host.querySelector("span")).toBeNull();
        expect(host.textContent).toBe("variable = other");
    });
});
