/**
 * Minimal view layer: plain virtual nodes, renderable to an HTML string or
 * to real DOM. No framework, no client-side state beyond what views are
 * handed — the console renders only what the API returned.
 */

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: (VNode | string)[];
}

export function h(tag: string, attrs: Record<string, string> = {}, ...children: (VNode | string | (VNode | string)[])[]): VNode {
  const flat: (VNode | string)[] = [];
  for (const c of children) {
    if (Array.isArray(c)) flat.push(...c);
    else flat.push(c);
  }
  return { tag, attrs, children: flat };
}

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
};

function escapeHtml(text: string): string {
  return text.replace(/[&<>"]/g, (ch) => ESCAPES[ch]);
}

export function renderToString(node: VNode | string): string {
  if (typeof node === "string") return escapeHtml(node);
  const attrs = Object.entries(node.attrs)
    .map(([k, v]) => ` ${k}="${escapeHtml(v)}"`)
    .join("");
  const inner = node.children.map(renderToString).join("");
  return `<${node.tag}${attrs}>${inner}</${node.tag}>`;
}

/** Walk a VNode tree collecting nodes that satisfy a predicate. */
export function collect(node: VNode | string, pred: (n: VNode) => boolean, out: VNode[] = []): VNode[] {
  if (typeof node === "string") return out;
  if (pred(node)) out.push(node);
  for (const c of node.children) collect(c, pred, out);
  return out;
}

export function textOf(node: VNode | string): string {
  if (typeof node === "string") return node;
  return node.children.map(textOf).join("");
}

/** Browser-side materialization; unused in tests, which stay DOM-free. */
export function toDom(node: VNode | string, doc: Document): Node {
  if (typeof node === "string") return doc.createTextNode(node);
  const el = doc.createElement(node.tag);
  for (const [k, v] of Object.entries(node.attrs)) el.setAttribute(k, v);
  for (const c of node.children) el.appendChild(toDom(c, doc));
  return el;
}
