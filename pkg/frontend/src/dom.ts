/** Tiny DOM helpers; no framework, numbers render exactly as fetched. */

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

/** Render a fetched integer field byte-for-byte. */
export function fmtNum(value: number): string {
  return String(value);
}

/**
 * Render a fetched float field byte-for-byte as the service serializes it:
 * shortest round-trip decimal, with integral values keeping their ".0"
 * (JSON loses the int/float distinction on parse, so float-typed fields
 * restore it here).
 */
export function fmtFloat(value: number): string {
  return Number.isInteger(value) ? `${value}.0` : String(value);
}

export function clear(node: Element): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}
