/**
 * Table-to-text serialization.
 *
 * A row becomes "<column name> is <value>" segments joined with " ; ", the
 * cell value concatenated with its column name. Masked headers keep the
 * literal [UNK] marker. Long serializations are truncated to the encoder's
 * token budget, mirroring the sequence-length ceiling of transformer
 * checkpoints.
 */

export interface Linearized {
  text: string;
  truncated: boolean;
}

export function tokenCount(text: string): number {
  return text.split(/\s+/).filter(Boolean).length;
}

export function truncateToTokens(text: string, maxTokens: number): Linearized {
  const tokens = text.split(/\s+/).filter(Boolean);
  if (tokens.length <= maxTokens) {
    return { text, truncated: false };
  }
  return { text: tokens.slice(0, maxTokens).join(" "), truncated: true };
}

export function rowText(header: string[], row: string[]): string {
  return header.map((name, m) => `${name} is ${row[m]}`).join(" ; ");
}

export function columnText(
  utterance: string,
  headerCell: string,
  columnCells: string[],
): string {
  const content = columnCells.join(" ; ");
  return `${utterance.trim()} ${headerCell} is ${content}`.trim();
}
