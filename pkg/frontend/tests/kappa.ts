/** Cohen's kappa, computed independently for end-to-end verification. */
export function cohenKappa(a: string[], b: string[]): number {
  if (a.length !== b.length || a.length === 0) {
    throw new Error("label lists must be non-empty and aligned");
  }
  const n = a.length;
  const categories = [...new Set([...a, ...b])];
  let observed = 0;
  for (let i = 0; i < n; i++) if (a[i] === b[i]) observed += 1;
  const po = observed / n;
  let pe = 0;
  for (const c of categories) {
    const pa = a.filter((x) => x === c).length / n;
    const pb = b.filter((x) => x === c).length / n;
    pe += pa * pb;
  }
  if (pe === 1) return po === 1 ? 1 : 0;
  return (po - pe) / (1 - pe);
}
