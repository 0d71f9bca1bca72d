/** Small display helpers shared by the grid and the drill-down chart. */

const MONTHS = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

/** "Jan 2021" style label for an ISO date; locale-independent on purpose. */
export function monthLabel(isoDay: string): string {
  const month = Number(isoDay.slice(5, 7));
  return `${MONTHS[month - 1]} ${isoDay.slice(0, 4)}`;
}

/** Tick positions at the first day and every first-of-month, as the server renders. */
export function monthTicks(days: string[]): { index: number; label: string }[] {
  const ticks: { index: number; label: string }[] = [];
  days.forEach((day, index) => {
    if (index === 0 || day.slice(8, 10) === "01") {
      ticks.push({ index, label: monthLabel(day) });
    }
  });
  return ticks;
}

export function fmtPu(value: number | null): string {
  return value === null ? "no data" : `${value.toFixed(4)} p.u.`;
}

/** ISO date strictly inside the run's day axis, for client-side range checks. */
export function validBrush(start: string, end: string, days: string[]): string | null {
  if (!/^\d{4}-\d{2}-\d{2}$/.test(start) || !/^\d{4}-\d{2}-\d{2}$/.test(end)) {
    return "dates must be YYYY-MM-DD";
  }
  if (!(start < end)) return "start must be before end";
  const first = days[0];
  const last = days[days.length - 1];
  if (first === undefined || last === undefined) return "no day axis loaded";
  if (end <= first || start > last) return "range lies outside the run's days";
  return null;
}
