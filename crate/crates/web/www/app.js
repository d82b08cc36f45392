// Built by: wasm-pack build crates/web --target web --out-dir www/pkg
import init, { shape_diagram, grf_texture, stability_check } from "./pkg/sdph_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function show(json, labels) {
  const res = JSON.parse(json);
  const plots = $("plots");
  plots.replaceChildren();
  if (res.error) {
    $("report").textContent = res.error;
    $("report").className = "error";
    return;
  }
  $("report").className = "";
  res.svg.forEach((svg, i) => {
    const box = document.createElement("div");
    box.innerHTML = svg;
    box.title = labels[i];
    plots.appendChild(box);
  });
  delete res.svg;
  $("report").textContent = JSON.stringify(res, null, 2);
}

function timed(fn) {
  return () => {
    $("status").textContent = "computing...";
    // let the status repaint before the blocking call
    setTimeout(() => {
      const t0 = performance.now();
      fn();
      $("status").textContent = `done in ${((performance.now() - t0) / 1000).toFixed(2)} s`;
    }, 10);
  };
}

$("run-shape").onclick = timed(() =>
  show(
    shape_diagram($("shape").value, num("shape-size"), num("close-width"), num("shape-min-pers"), 0.5),
    ["H0", "H1", "H2"],
  ),
);

$("run-grf").onclick = timed(() =>
  show(
    grf_texture($("preset").value, num("seed"), num("grf-size"), num("grf-min-pers"), 0.5),
    ["H0", "H1", "H2"],
  ),
);

$("run-stab").onclick = timed(() =>
  show(
    stability_check($("stab-shape").value, num("stab-size"), num("eps"), num("seed")),
    ["H1 clean", "H1 perturbed"],
  ),
);

await init();
for (const id of ["run-shape", "run-grf", "run-stab"]) $(id).disabled = false;
$("status").textContent = "ready";
