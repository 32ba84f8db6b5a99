/** Client-side polygon logic mirroring the server's rules: even-odd
 * containment with boundary points counting as inside, rings explicitly
 * closed (first vertex repeated last). */

export type LatLon = [number, number];

export function ringClosed(ring: LatLon[]): boolean {
  if (ring.length < 4) return false;
  const [aLat, aLon] = ring[0];
  const [bLat, bLon] = ring[ring.length - 1];
  return aLat === bLat && aLon === bLon;
}

function onSegment(px: number, py: number, ax: number, ay: number, bx: number, by: number): boolean {
  const cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  if (cross !== 0) return false;
  return (
    Math.min(ax, bx) <= px && px <= Math.max(ax, bx) &&
    Math.min(ay, by) <= py && py <= Math.max(ay, by)
  );
}

export function pointInRing(lat: number, lon: number, ring: LatLon[]): boolean {
  const px = lon;
  const py = lat;
  for (let i = 0; i + 1 < ring.length; i++) {
    const [ay, ax] = ring[i];
    const [by, bx] = ring[i + 1];
    if (onSegment(px, py, ax, ay, bx, by)) return true;
  }
  let inside = false;
  for (let i = 0; i + 1 < ring.length; i++) {
    const [ay, ax] = ring[i];
    const [by, bx] = ring[i + 1];
    if (ay > py !== by > py) {
      const xCross = ax + ((py - ay) * (bx - ax)) / (by - ay);
      if (px < xCross) inside = !inside;
    }
  }
  return inside;
}
