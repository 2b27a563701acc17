"""Independent high-precision evaluation of the closed-form effects by direct
summation over the mediator (no g-functions). Used to freeze expected values."""
from mpmath import mp, mpf, exp, log
mp.dps = 40

def expit(z): return 1/(1+exp(-z))

def cum(a, bX, bM, bXM, x, m): return expit(a - (bX*x + bM*m + bXM*x*m))

def cf_logit(a, bX, bM, bXM, g0, gX, x, xs):
    pm1 = expit(g0 + gX*xs)
    le = cum(a,bX,bM,bXM,x,0)*(1-pm1) + cum(a,bX,bM,bXM,x,1)*pm1
    return log(le/(1-le))

def effects(alpha, bX, bM, bXM, g0, gX, x, xs):
    out = {}
    for j, a in enumerate(alpha, 1):
        L = lambda u, v: cf_logit(a,bX,bM,bXM,g0,gX,u,v)
        # log odds of Y>j is -logit(Y<=j)
        out[j] = dict(NDE=-(L(x,xs)-L(xs,xs)), NIE=-(L(x,x)-L(x,xs)), TCE=-(L(x,x)-L(xs,xs)))
    return out, (bX+bXM)*(x-xs), bX*(x-xs)

if __name__ == "__main__":
    m = [mpf(s) for s in ("2.5","5.5")]
    print("J3 reference", effects(m, mpf("1.1"), mpf("0.7"), mpf("0.5"), mpf(-1), mpf("0.5"), mpf("3.5"), mpf(2)))
    print("J5 reference", effects([mpf(s) for s in ("0.5","2.5","4.5","5.5")], mpf("0.5"), mpf("1.3"), mpf("0.6"), mpf(-1), mpf("0.5"), mpf("3.5"), mpf(2)))
    print("Sparse", effects([mpf(s) for s in ("-0.9","0.9","2.2","3.5")], mpf("0.5"), mpf("1.3"), mpf("0.6"), mpf(-1), mpf("0.9"), mpf("3.5"), mpf(2)))
    print("expit(0.75)", expit(mpf("0.75")))
    a=[mpf("2.5"),mpf("5.5")]; c1=cum(a[0],mpf("1.1"),mpf("0.7"),mpf("0.5"),2,0); c2=cum(a[1],mpf("1.1"),mpf("0.7"),mpf("0.5"),2,0)
    print("cat probs", c1, c2-c1, 1-c2)
    # g-function at j=1, x=3.5 via its explicit formula
    bX,bM,bXM,g0,gX=mpf("1.1"),mpf("0.7"),mpf("0.5"),mpf(-1),mpf("0.5")
    def g(d,a,x,xs): return -d*(bM+bXM*x)+log((1+exp(a-bX*x))/(1+exp(a-bX*x-bM-bXM*x)))+g0+gX*xs
    print("g0(3.5)", g(0,a[0],mpf("3.5"),mpf("3.5")), "g1", g(1,a[0],mpf("3.5"),mpf("3.5")))
    print("gcross0", g(0,a[0],mpf("3.5"),2), g(1,a[0],mpf("3.5"),2))
    for xx in (mpf("3.5"), mpf(2)):
        print("logRR x=",xx, log((1+exp(g(0,a[0],xx,xx)))/(1+exp(g(1,a[0],xx,xx)))), g(0,a[0],xx,xx), g(1,a[0],xx,xx))
    # marginal logit via direct mixture at x=2, j=1
    print("marg logit x=2", cf_logit(a[0],bX,bM,bXM,g0,gX,2,2))
