import init, { informativeness, compare_weights, balance_curve } from "./pkg/svyanova_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guarded(out, f) {
  try {
    f();
  } catch (e) {
    out.innerHTML = `<p class="err">${e.message ?? e}</p>`;
  }
}

function drawHistogram(canvas, h, title) {
  const ctx = canvas.getContext("2d");
  const { width: W, height: H } = canvas;
  ctx.clearRect(0, 0, W, H);
  const top = Math.max(...h.population, ...h.sample);
  const bw = (W - 20) / h.population.length;
  const bar = (d, i, color, offset) => {
    ctx.fillStyle = color;
    const bh = (d / top) * (H - 40);
    ctx.fillRect(10 + i * bw + offset, H - 20 - bh, bw / 2, bh);
  };
  h.population.forEach((d, i) => bar(d, i, "#9ab", 0));
  h.sample.forEach((d, i) => bar(d, i, "#d64", bw / 2));
  ctx.fillStyle = "#222";
  ctx.fillText(title, 10, 14);
  ctx.fillText(h.edges[0].toFixed(1), 10, H - 5);
  ctx.fillText(h.edges[h.edges.length - 1].toFixed(1), W - 40, H - 5);
}

function runInfo() {
  guarded($("info-out"), () => {
    const r = JSON.parse(informativeness(num("M"), num("m"), num("nk"), $("cluster").value, $("unit").value, num("seed")));
    drawHistogram($("hist-a"), r.a, "cluster effects a");
    drawHistogram($("hist-eps"), r.eps, "residuals ε");
    const q = (v) => v.map((x) => x.toFixed(2)).join(" / ");
    const s = r.summary;
    $("info-out").innerHTML = `<table>
      <tr><th></th><th>a: 5% / 50% / 95%</th><th>ε: 5% / 50% / 95%</th></tr>
      <tr><td>population</td><td>${q(s.population.a)}</td><td>${q(s.population.eps)}</td></tr>
      <tr><td>sample</td><td>${q(s.sample.a)}</td><td>${q(s.sample.eps)}</td></tr></table>`;
  });
}

function runCompare() {
  $("cmp-out").textContent = "running…";
  // let the status paint before the synchronous fit
  setTimeout(() =>
    guarded($("cmp-out"), () => {
      const r = JSON.parse(
        compare_weights(num("M"), num("m"), num("nk"), $("cluster").value, $("unit").value, num("iters"), num("seed")),
      );
      const cell = (f, key) => {
        const q = f.quantiles;
        return `${f.point_estimates[key].toFixed(3)} <small>(${q.q05[key].toFixed(2)}, ${q.q95[key].toFixed(2)})</small>`;
      };
      const rows = r.fits
        .map((f) => `<tr><td>${f.mode}</td><td>${cell(f, "b0")}</td><td>${cell(f, "sigma_a")}</td><td>${cell(f, "sigma_eps")}</td></tr>`)
        .join("");
      $("cmp-out").innerHTML = `<table>
        <tr><th>weights</th><th>b0</th><th>σ_a</th><th>σ_ε</th></tr>
        <tr><td>truth</td><td>${r.truth[0]}</td><td>${r.truth[1]}</td><td>${r.truth[2]}</td></tr>${rows}</table>
        <p>Posterior mean (5%, 95% posterior quantiles).</p>`;
    }),
  );
}

function runBalance() {
  const canvas = $("bal");
  const ctx = canvas.getContext("2d");
  $("bal-out").innerHTML = "";
  guarded($("bal-out"), () => {
    const nks = [2, 5, 10, 20, 30, 40];
    const r = JSON.parse(balance_curve(num("M"), $("unit").value, new Uint32Array(nks), num("reps"), num("seed")));
    const { width: W, height: H } = canvas;
    ctx.clearRect(0, 0, W, H);
    const hi = Math.max(0.1, ...r.points.map((p) => p.overall_mean + 2 * p.standard_error));
    const lo = Math.min(-0.1, ...r.points.map((p) => p.overall_mean - 2 * p.standard_error));
    const x = (nk) => 40 + ((nk - 2) / 38) * (W - 60);
    const y = (v) => H - 25 - ((v - lo) / (hi - lo)) * (H - 45);
    ctx.strokeStyle = "#aaa";
    ctx.beginPath();
    ctx.moveTo(x(2), y(0));
    ctx.lineTo(x(40), y(0));
    ctx.stroke();
    ctx.fillStyle = "#222";
    ctx.strokeStyle = "#d64";
    for (const p of r.points) {
      ctx.beginPath();
      ctx.moveTo(x(p.n_k), y(p.overall_mean - 2 * p.standard_error));
      ctx.lineTo(x(p.n_k), y(p.overall_mean + 2 * p.standard_error));
      ctx.stroke();
      ctx.fillRect(x(p.n_k) - 3, y(p.overall_mean) - 3, 6, 6);
      ctx.fillText(`n_k=${p.n_k}`, x(p.n_k) - 14, H - 8);
    }
    ctx.fillText(`${hi.toFixed(2)}`, 2, 14);
    ctx.fillText(`${lo.toFixed(2)}`, 2, H - 25);
  });
}

await init();
$("run-info").onclick = runInfo;
$("run-cmp").onclick = runCompare;
$("run-bal").onclick = runBalance;
runInfo();
