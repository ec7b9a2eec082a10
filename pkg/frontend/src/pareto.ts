/**
 * Nondominated flags for points minimized in both coordinates.
 *
 * Must match the harness exactly: point i is dominated when some j has
 * z1[j] <= z1[i] and z2[j] <= z2[i] with at least one strict inequality;
 * identical points do not dominate each other.
 */
export function paretoNondominated(z1: number[], z2: number[]): boolean[] {
  if (z1.length !== z2.length) {
    throw new Error("coordinate arrays must have equal length");
  }
  return z1.map((_, i) => {
    for (let j = 0; j < z1.length; j++) {
      if (j === i) continue;
      const noWorse = z1[j] <= z1[i] && z2[j] <= z2[i];
      const strictlyBetter = z1[j] < z1[i] || z2[j] < z2[i];
      if (noWorse && strictlyBetter) return false;
    }
    return true;
  });
}
