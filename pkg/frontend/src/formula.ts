/**
 * Formula parser for live field validation and parameter highlighting.
 *
 * Same grammar as the engine (docs/adaptics-format.md): `+ - * /`, unary
 * minus, parentheses, bare identifiers, backtick-quoted names, numbers.
 * The designer only needs syntax checking and the referenced-parameter
 * set; evaluation happens engine-side.
 */

export class FormulaSyntaxError extends Error {
  constructor(message: string, readonly position: number, readonly expected: string[] = []) {
    super(`${message} at position ${position}`);
  }
}

export type FormulaNode =
  | { kind: "const"; value: number }
  | { kind: "param"; name: string }
  | { kind: "neg"; child: FormulaNode }
  | { kind: "binop"; op: "+" | "-" | "*" | "/"; left: FormulaNode; right: FormulaNode };

interface Token {
  kind: "number" | "ident" | "quoted" | "op" | "end";
  text: string;
  pos: number;
}

const NUMBER_RE = /^(?:\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)/;
const IDENT_RE = /^[A-Za-z_][A-Za-z0-9_]*/;

function tokenize(text: string): Token[] {
  const tokens: Token[] = [];
  let pos = 0;
  while (pos < text.length) {
    const ch = text[pos]!;
    if (/\s/.test(ch)) {
      pos += 1;
      continue;
    }
    const rest = text.slice(pos);
    const num = NUMBER_RE.exec(rest);
    if (num) {
      tokens.push({ kind: "number", text: num[0], pos });
      pos += num[0].length;
      continue;
    }
    const ident = IDENT_RE.exec(rest);
    if (ident) {
      tokens.push({ kind: "ident", text: ident[0], pos });
      pos += ident[0].length;
      continue;
    }
    if (ch === "`") {
      const end = text.indexOf("`", pos + 1);
      if (end < 0) throw new FormulaSyntaxError("unterminated quoted parameter", pos);
      tokens.push({ kind: "quoted", text: text.slice(pos, end + 1), pos });
      pos = end + 1;
      continue;
    }
    if ("+-*/()".includes(ch)) {
      tokens.push({ kind: "op", text: ch, pos });
      pos += 1;
      continue;
    }
    throw new FormulaSyntaxError(`unexpected character ${JSON.stringify(ch)}`, pos);
  }
  tokens.push({ kind: "end", text: "", pos });
  return tokens;
}

export function parseFormula(text: string): FormulaNode {
  const tokens = tokenize(text);
  let i = 0;
  const tok = () => tokens[i]!;

  function expr(): FormulaNode {
    let node = term();
    while (tok().kind === "op" && (tok().text === "+" || tok().text === "-")) {
      const op = tok().text as "+" | "-";
      i += 1;
      node = { kind: "binop", op, left: node, right: term() };
    }
    return node;
  }

  function term(): FormulaNode {
    let node = factor();
    while (tok().kind === "op" && (tok().text === "*" || tok().text === "/")) {
      const op = tok().text as "*" | "/";
      i += 1;
      node = { kind: "binop", op, left: node, right: factor() };
    }
    return node;
  }

  function factor(): FormulaNode {
    if (tok().kind === "op" && tok().text === "-") {
      i += 1;
      return { kind: "neg", child: factor() };
    }
    return primary();
  }

  function primary(): FormulaNode {
    const t = tok();
    if (t.kind === "number") {
      const value = Number(t.text);
      if (!Number.isFinite(value)) throw new FormulaSyntaxError("number literal overflows", t.pos);
      i += 1;
      return { kind: "const", value };
    }
    if (t.kind === "ident") {
      i += 1;
      return { kind: "param", name: t.text };
    }
    if (t.kind === "quoted") {
      const name = t.text.slice(1, -1);
      if (!name) throw new FormulaSyntaxError("empty parameter name", t.pos);
      i += 1;
      return { kind: "param", name };
    }
    if (t.kind === "op" && t.text === "(") {
      i += 1;
      const node = expr();
      const closing = tok();
      if (!(closing.kind === "op" && closing.text === ")")) {
        throw new FormulaSyntaxError("expected ')'", closing.pos, [")", "+", "-", "*", "/"]);
      }
      i += 1;
      return node;
    }
    const shown = t.text === "" ? "end of formula" : JSON.stringify(t.text);
    throw new FormulaSyntaxError(`expected a value, found ${shown}`, t.pos, ["number", "parameter", "(", "-"]);
  }

  const node = expr();
  if (tok().kind !== "end") {
    throw new FormulaSyntaxError(`unexpected ${JSON.stringify(tok().text)}`, tok().pos, ["+", "-", "*", "/"]);
  }
  return node;
}

/** Syntax check returning an inline-displayable error instead of throwing. */
export function checkFormula(text: string): { ok: true } | { ok: false; position: number; message: string } {
  try {
    parseFormula(text);
    return { ok: true };
  } catch (e) {
    if (e instanceof FormulaSyntaxError) {
      return { ok: false, position: e.position, message: e.message };
    }
    throw e;
  }
}

export function referencedParams(text: string): Set<string> {
  const out = new Set<string>();
  const walk = (node: FormulaNode): void => {
    switch (node.kind) {
      case "param":
        out.add(node.name);
        break;
      case "neg":
        walk(node.child);
        break;
      case "binop":
        walk(node.left);
        walk(node.right);
        break;
    }
  };
  walk(parseFormula(text));
  return out;
}

/** Render a parameter name as formula source (quoting when needed). */
export function formatParamRef(name: string): string {
  return /^[A-Za-z_][A-Za-z0-9_]*$/.test(name) ? name : `\`${name}\``;
}
