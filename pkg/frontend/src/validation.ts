/**
 * Client-side partition validation.
 *
 * Must accept exactly the inputs the server accepts; the two
 * implementations are held together by the shared test vectors in
 * ../shared/partition_vectors.json.
 */

export function validatePartition(
  factIds: readonly string[],
  numBios: number,
  bioSpans: readonly (readonly string[])[],
): string[] {
  const problems: string[] = [];
  if (numBios < 1) {
    problems.push("num_bios must be >= 1");
  }
  if (bioSpans.length !== numBios) {
    problems.push(`bio_spans has ${bioSpans.length} groups but num_bios is ${numBios}`);
  }
  const known = new Set(factIds);
  const seen = new Set<string>();
  bioSpans.forEach((span, index) => {
    if (span.length === 0) {
      problems.push(`bio ${index} is empty`);
    }
    for (const factId of span) {
      if (!known.has(factId)) {
        problems.push(`bio ${index} references unknown fact '${factId}'`);
      } else if (seen.has(factId)) {
        problems.push(`fact '${factId}' appears in more than one bio`);
      }
      seen.add(factId);
    }
  });
  const missing = [...known].filter((id) => !seen.has(id));
  if (missing.length > 0) {
    problems.push(`facts not covered by any bio: ${missing.sort().join(", ")}`);
  }
  return problems;
}

export function isValidPartition(
  factIds: readonly string[],
  numBios: number,
  bioSpans: readonly (readonly string[])[],
): boolean {
  return validatePartition(factIds, numBios, bioSpans).length === 0;
}
