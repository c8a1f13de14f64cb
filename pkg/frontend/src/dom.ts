/** Tiny DOM helper: h("div", {class: "x", onclick}, children...). */

export type Child = Node | string | null | undefined;

export function h(
  tag: string,
  attrs: Record<string, unknown> = {},
  ...children: Child[]
): HTMLElement {
  const el = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (value === null || value === undefined || value === false) continue;
    if (key.startsWith("on") && typeof value === "function") {
      el.addEventListener(key.slice(2), value as EventListener);
    } else if (value === true) {
      el.setAttribute(key, "");
    } else {
      el.setAttribute(key, String(value));
    }
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    el.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return el;
}

export function replaceChildren(root: HTMLElement, ...children: Child[]): void {
  root.replaceChildren(
    ...children
      .filter((c): c is Node | string => c !== null && c !== undefined)
      .map((c) => (c instanceof Node ? c : document.createTextNode(c))),
  );
}
